// jadce - joint activity detection and channel estimation for grant-free access
// Copyright (C) 2026 the jadce authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "jadce/eval.hpp"

#include <algorithm>
#include <cmath>

#include "jadce/solvers.hpp"

namespace jadce {

double norm_l21(const Mat &m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        total += m.row(i).norm();
    return total;
}

double nmse_db(std::span<const Mat> estimates, std::span<const Mat> truths) {
    if (estimates.size() != truths.size() || estimates.empty())
        throw_invalid("nmse_db needs matching nonempty batches");
    double err = 0.0, ref = 0.0;
    for (size_t i = 0; i < estimates.size(); ++i) {
        if (estimates[i].rows() != truths[i].rows() || estimates[i].cols() != truths[i].cols())
            throw_dims("estimate and truth shapes differ");
        err += (estimates[i] - truths[i]).squaredNorm();
        ref += truths[i].squaredNorm();
    }
    if (ref == 0.0)
        throw_numerical("NMSE is undefined for an all-zero ground-truth batch");
    if (err == 0.0)
        return exact_recovery_db;
    return 10.0 * std::log10(err / ref);
}

double nmse_db(const Mat &estimate, const Mat &truth) {
    return nmse_db(std::span<const Mat>(&estimate, 1), std::span<const Mat>(&truth, 1));
}

double error_rate(std::span<const Mat> estimates, std::span<const Mat> truths) {
    if (estimates.size() != truths.size() || estimates.empty())
        throw_invalid("error_rate needs matching nonempty batches");
    double total = 0.0;
    Eigen::Index rows = truths[0].rows();
    for (size_t i = 0; i < estimates.size(); ++i) {
        if (estimates[i].rows() != rows || truths[i].rows() != rows)
            throw_dims("batch entries must share the lifted row count");
        for (Eigen::Index r = 0; r < rows; ++r)
            total += std::abs(estimates[i].row(r).norm() - truths[i].row(r).norm());
    }
    return total / (static_cast<double>(estimates.size()) * static_cast<double>(rows));
}

namespace {
double combined_row_norm(const Mat &x_lift, Eigen::Index device, Eigen::Index n) {
    double a = x_lift.row(device).squaredNorm();
    double b = x_lift.row(device + n).squaredNorm();
    return std::sqrt(a + b);
}
} // namespace

std::vector<std::uint8_t> detect_activity(const Mat &x_lift, double tau) {
    if (x_lift.rows() % 2 != 0)
        throw_dims("lifted estimate must have an even number of rows");
    if (!(tau >= 0.0))
        throw_invalid("detection threshold must be >= 0");
    Eigen::Index n = x_lift.rows() / 2;
    std::vector<std::uint8_t> act(static_cast<size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i)
        act[static_cast<size_t>(i)] = combined_row_norm(x_lift, i, n) > tau ? 1 : 0;
    return act;
}

double default_activity_threshold(std::span<const Sample> train_samples) {
    std::vector<double> norms;
    Eigen::Index m = 0;
    for (const Sample &s : train_samples) {
        Eigen::Index n = s.x_lift.rows() / 2;
        m = s.x_lift.cols();
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = combined_row_norm(s.x_lift, i, n);
            if (v > 0.0)
                norms.push_back(v);
        }
    }
    if (norms.empty())
        throw_numerical("cannot calibrate a detection threshold on all-inactive data");
    std::sort(norms.begin(), norms.end());
    size_t half = norms.size() / 2;
    double median = (norms.size() % 2 == 1) ? norms[half] : 0.5 * (norms[half - 1] + norms[half]);
    return 0.1 * std::sqrt(static_cast<double>(m)) * median;
}

bool support_contained(const Mat &estimate, const Mat &truth, double tol) {
    if (estimate.rows() != truth.rows())
        throw_dims("estimate and truth must share the row count");
    for (Eigen::Index i = 0; i < estimate.rows(); ++i)
        if (estimate.row(i).norm() > tol && !(truth.row(i).norm() > tol))
            return false;
    return true;
}

DetectionCounts detection_counts(const Mat &x_lift, std::span<const std::uint8_t> activity,
                                 double tau) {
    auto detected = detect_activity(x_lift, tau);
    if (detected.size() != activity.size())
        throw_dims("activity vector length does not match the estimate");
    DetectionCounts counts;
    for (size_t i = 0; i < detected.size(); ++i) {
        if (activity[i] && !detected[i])
            ++counts.misses;
        if (!activity[i] && detected[i])
            ++counts.false_alarms;
    }
    return counts;
}

RateFit fit_linear_rate(std::span<const double> nmse_curve_db, double noise_floor_db) {
    std::vector<double> ks, ys;
    for (size_t k = 0; k < nmse_curve_db.size(); ++k) {
        if (nmse_curve_db[k] >= noise_floor_db + 3.0) {
            ks.push_back(static_cast<double>(k));
            ys.push_back(nmse_curve_db[k]);
        }
    }
    if (ks.size() < 4)
        throw_numerical("rate fit needs at least 4 layers above the noise floor, got " +
                        std::to_string(ks.size()));

    double n = static_cast<double>(ks.size());
    double km = 0.0, ym = 0.0;
    for (size_t i = 0; i < ks.size(); ++i) {
        km += ks[i];
        ym += ys[i];
    }
    km /= n;
    ym /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - km) * (ys[i] - ym);
        sxx += (ks[i] - km) * (ks[i] - km);
        syy += (ys[i] - ym) * (ys[i] - ym);
    }

    RateFit fit;
    fit.used_layers = static_cast<int>(ks.size());
    fit.slope_db_per_layer = sxy / sxx;
    fit.intercept_db = ym - fit.slope_db_per_layer * km;
    fit.c1 = -fit.slope_db_per_layer * std::log(10.0) / 20.0;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (size_t i = 0; i < ks.size(); ++i) {
            double pred = fit.intercept_db + fit.slope_db_per_layer * ks[i];
            ss_res += (ys[i] - pred) * (ys[i] - pred);
        }
        fit.r2 = 1.0 - ss_res / syy;
    } else {
        fit.r2 = 0.0; // flat curve carries no trend to explain
    }
    return fit;
}

TheoremProbe theorem_probe(const Mat &weights, const Mat &s_lift, std::span<const Sample> batch,
                           double support_tol) {
    TheoremProbe probe;
    CoherenceReport rep = coherence_report(weights, s_lift);
    probe.mu_b = rep.mu_b;
    probe.phi_hat = rep.phi_hat;
    for (const Sample &s : batch) {
        int support = 0;
        for (Eigen::Index i = 0; i < s.x_lift.rows(); ++i) {
            double rn = s.x_lift.row(i).norm();
            probe.mu_x = std::max(probe.mu_x, rn);
            if (rn > support_tol)
                ++support;
        }
        probe.sparsity = std::max(probe.sparsity, support);
        probe.epsilon = std::max(probe.epsilon, (s.y_lift - s_lift * s.x_lift).norm());
    }
    return probe;
}

} // namespace jadce
