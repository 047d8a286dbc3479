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

#include "jadce/prox.hpp"

#include <cmath>
#include <limits>

namespace jadce {

void McpParams::validate() const {
    if (!std::isfinite(threshold) || threshold < 0.0)
        throw_invalid("mcp threshold must be finite and >= 0");
    if (!std::isfinite(nonconvexity) || nonconvexity < 0.0)
        throw_invalid("mcp nonconvexity must be finite and >= 0");
    if (threshold > 0.0 && 2.0 * threshold * nonconvexity >= 1.0)
        throw_invalid("mcp nonconvexity must be < 1/(2*threshold)");
}

double mcp_penalty(double x, double nonconvexity) {
    if (!(nonconvexity > 0.0))
        throw_invalid("mcp_penalty requires nonconvexity > 0");
    double ax = std::abs(x);
    double radius = 1.0 / (2.0 * nonconvexity);
    if (ax <= radius)
        return ax - nonconvexity * x * x;
    return 1.0 / (4.0 * nonconvexity);
}

namespace {

// Penalty value admitting the nonconvexity -> 0 limit (plain absolute value).
inline double penalty_or_abs(double x, double nonconvexity) {
    return nonconvexity > 0.0 ? mcp_penalty(x, nonconvexity) : std::abs(x);
}

inline double saturation_radius(double nonconvexity) {
    return nonconvexity > 0.0 ? 1.0 / (2.0 * nonconvexity)
                              : std::numeric_limits<double>::infinity();
}

inline double prox_scalar_impl(double u, double threshold, double radius, double expansion) {
    double au = std::abs(u);
    if (au <= threshold)
        return 0.0;
    if (au <= radius) {
        double s = u > 0.0 ? 1.0 : -1.0;
        return (u - threshold * s) * expansion;
    }
    return u;
}

} // namespace

double mcp_prox_scalar(double u, const McpParams &p) {
    p.validate();
    return prox_scalar_impl(u, p.threshold, saturation_radius(p.nonconvexity), p.expansion());
}

McpProxDerivs mcp_prox_derivs(double u, const McpParams &p) {
    McpProxDerivs d;
    double au = std::abs(u);
    if (au <= p.threshold)
        return d; // dead zone, all zero
    double radius = saturation_radius(p.nonconvexity);
    if (au < radius) {
        double s = u > 0.0 ? 1.0 : -1.0;
        double f = p.expansion();
        double shrunk = u - p.threshold * s;
        d.du = f;
        d.dthreshold = -s * f + 2.0 * p.nonconvexity * shrunk * f * f;
        d.dnonconvexity = 2.0 * p.threshold * shrunk * f * f;
        return d;
    }
    d.du = 1.0; // pass-through branch, including the boundary |u| == radius
    return d;
}

Mat mcp_prox(const Mat &pre, const McpParams &p) {
    p.validate();
    double radius = saturation_radius(p.nonconvexity);
    double expansion = p.expansion();
    Mat out(pre.rows(), pre.cols());
    for (Eigen::Index j = 0; j < pre.cols(); ++j)
        for (Eigen::Index i = 0; i < pre.rows(); ++i)
            out(i, j) = prox_scalar_impl(pre(i, j), p.threshold, radius, expansion);
    return out;
}

double prox_oracle(double u, const McpParams &p, double grid_halfwidth, double grid_step) {
    p.validate();
    double theta = p.threshold;
    double eta = p.nonconvexity;
    auto objective = [&](double x) {
        double r = x - u;
        return theta * penalty_or_abs(x, eta) + 0.5 * r * r;
    };
    double best_x = u - grid_halfwidth;
    double best_f = objective(best_x);
    long steps = static_cast<long>(std::ceil(2.0 * grid_halfwidth / grid_step));
    for (long k = 1; k <= steps; ++k) {
        double x = u - grid_halfwidth + static_cast<double>(k) * grid_step;
        double f = objective(x);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    return best_x;
}

Mat group_soft_threshold(const Mat &x, double threshold) {
    if (!std::isfinite(threshold) || threshold < 0.0)
        throw_invalid("group_soft_threshold requires finite threshold >= 0");
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double n = x.row(i).norm();
        if (n > threshold)
            out.row(i) = x.row(i) * ((n - threshold) / n);
    }
    return out;
}

} // namespace jadce
