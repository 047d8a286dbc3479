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

#include "jadce/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "jadce/prox.hpp"
#include "jadce/rng.hpp"

namespace jadce {

double spectral_norm_sq(const Mat &a, double rel_tol, int max_iters) {
    if (a.size() == 0)
        throw_invalid("spectral_norm_sq requires a nonempty matrix");
    require_finite(a, "matrix");
    if (a.cwiseAbs().maxCoeff() == 0.0)
        throw_invalid("spectral_norm_sq requires a nonzero matrix");
    if (!(rel_tol > 0.0) || max_iters < 1)
        throw_invalid("spectral_norm_sq tolerances must be positive");

    // Deterministic start, almost surely not orthogonal to the top eigenspace.
    Rng rng(0x5eedf00dull);
    Vec v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = rng.normal();
    v.normalize();

    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vec av = a.transpose() * (a * v); // Gram apply
        lambda = v.dot(av);               // Rayleigh quotient at unit v
        double residual = (av - lambda * v).norm();
        if (residual <= rel_tol * lambda)
            return lambda + residual;
        double norm = av.norm();
        if (norm == 0.0)
            throw_numerical("power iteration collapsed to the null space");
        v = av / norm;
    }
    throw PowerIterationError("power iteration did not converge", lambda);
}

void IstaConfig::validate() const {
    if (!(reg_weight >= 0.0) || !std::isfinite(reg_weight))
        throw_invalid("reg_weight must be finite and >= 0");
    if (max_iters < 1)
        throw_invalid("max_iters must be >= 1");
    if (step && !(*step > 0.0))
        throw_invalid("step must be positive");
    if (trajectory_stride < 1)
        throw_invalid("trajectory_stride must be >= 1");
    if (rel_tol < 0.0)
        throw_invalid("rel_tol must be >= 0");
}

double ista_objective(const Mat &s_lift, const Mat &y_lift, const Mat &x, double reg_weight) {
    Mat r = y_lift - s_lift * x;
    long double fit = 0.0L;
    for (Eigen::Index j = 0; j < r.cols(); ++j)
        for (Eigen::Index i = 0; i < r.rows(); ++i)
            fit += static_cast<long double>(r(i, j)) * static_cast<long double>(r(i, j));
    long double reg = 0.0L;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        reg += static_cast<long double>(x.row(i).norm());
    return static_cast<double>(0.5L * fit + static_cast<long double>(reg_weight) * reg);
}

IstaResult ista_gs(const Mat &s_lift, const Mat &y_lift, const IstaConfig &cfg) {
    cfg.validate();
    if (s_lift.rows() != y_lift.rows())
        throw_dims("signature and measurement row counts differ");

    IstaResult res;
    res.step = cfg.step ? *cfg.step : 1.0 / spectral_norm_sq(s_lift);
    double shrink = cfg.reg_weight * res.step;

    Mat x = Mat::Zero(s_lift.cols(), y_lift.cols());
    res.estimates.push_back(x);
    res.objective.push_back(ista_objective(s_lift, y_lift, x, cfg.reg_weight));

    for (int it = 1; it <= cfg.max_iters; ++it) {
        Mat grad_step = x + res.step * (s_lift.transpose() * (y_lift - s_lift * x));
        Mat x_next = group_soft_threshold(grad_step, shrink);
        double change = (x_next - x).norm();
        x = std::move(x_next);
        res.iterations = it;
        if (it % cfg.trajectory_stride == 0)
            res.estimates.push_back(x);
        res.objective.push_back(ista_objective(s_lift, y_lift, x, cfg.reg_weight));
        if (cfg.rel_tol > 0.0 && change <= cfg.rel_tol * std::max(1.0, x.norm()))
            break;
    }
    if (res.iterations % cfg.trajectory_stride != 0)
        res.estimates.push_back(x); // always retain the final iterate
    return res;
}

namespace {

// Cholesky of the row-space Gram matrix S*S^T; shared by the closed form and
// the feasibility checks.  Throws when S is row-rank deficient.
Eigen::LDLT<Mat> row_gram_ldlt(const Mat &s_lift) {
    if (s_lift.rows() > s_lift.cols())
        throw_numerical("weight design needs at least as many columns as rows");
    Mat gram = s_lift * s_lift.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    double emin = es.eigenvalues().minCoeff();
    double emax = es.eigenvalues().maxCoeff();
    if (!(emin > 0.0) || emax / emin > 1e12)
        throw_numerical("signature matrix is row-rank deficient");
    Eigen::LDLT<Mat> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
        throw_numerical("row-space Gram factorization failed");
    return ldlt;
}

void require_nonzero_columns(const Mat &s_lift) {
    for (Eigen::Index i = 0; i < s_lift.cols(); ++i)
        if (s_lift.col(i).norm() == 0.0)
            throw_invalid("unit-gain constraint is infeasible: signature column " +
                          std::to_string(i) + " is zero");
}

} // namespace

Mat analytic_weight_closed_form(const Mat &s_lift) {
    require_finite(s_lift, "signature");
    require_nonzero_columns(s_lift);
    auto ldlt = row_gram_ldlt(s_lift);
    // For each column s_i: row b_i = (G^-1 s_i) / (s_i^T G^-1 s_i).
    Mat solved = ldlt.solve(s_lift); // 2L x 2N, column i is G^-1 s_i
    Mat weights(s_lift.cols(), s_lift.rows());
    for (Eigen::Index i = 0; i < s_lift.cols(); ++i) {
        double gain = s_lift.col(i).dot(solved.col(i));
        if (!(gain > 0.0))
            throw_numerical("unit-gain normalizer is not positive; matrix is near-singular");
        weights.row(i) = solved.col(i).transpose() / gain;
    }
    return weights;
}

Mat analytic_weight_pgd(const Mat &s_lift, const PgdConfig &cfg) {
    require_finite(s_lift, "signature");
    require_nonzero_columns(s_lift);
    if (cfg.steps < 0)
        throw_invalid("step count must be >= 0");
    if (cfg.learning_rate && !(*cfg.learning_rate > 0.0))
        throw_invalid("learning rate must be positive");
    row_gram_ldlt(s_lift); // fail early on rank deficiency

    Eigen::Index rows = s_lift.cols(), cols = s_lift.rows();
    double lr = cfg.learning_rate ? *cfg.learning_rate : 1.0 / (2.0 * spectral_norm_sq(s_lift));

    Vec inv_col_sq(rows);
    for (Eigen::Index i = 0; i < rows; ++i)
        inv_col_sq(i) = 1.0 / s_lift.col(i).squaredNorm();

    auto project_rows = [&](Mat &b) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            double gap = 1.0 - b.row(i).dot(s_lift.col(i));
            b.row(i) += gap * inv_col_sq(i) * s_lift.col(i).transpose();
        }
    };

    // Feasible start: b_i = s_i / ||s_i||^2.
    Mat b = Mat::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        b.row(i) = inv_col_sq(i) * s_lift.col(i).transpose();

    for (int step = 0; step < cfg.steps; ++step) {
        Mat grad = 2.0 * (b * s_lift) * s_lift.transpose();
        b -= lr * grad;
        project_rows(b);
    }
    return b;
}

CoherenceReport coherence_report(const Mat &weights, const Mat &s_lift) {
    if (weights.cols() != s_lift.rows() || weights.rows() != s_lift.cols())
        throw_dims("weight shape must be the transpose of the signature shape");
    Mat c = weights * s_lift;
    CoherenceReport rep;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            double v = std::abs(c(i, j));
            if (i == j)
                rep.diag_max_dev = std::max(rep.diag_max_dev, std::abs(c(i, j) - 1.0));
            else
                rep.phi_hat = std::max(rep.phi_hat, v);
        }
    }
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
        rep.mu_b += weights.row(i).norm();
    return rep;
}

} // namespace jadce
