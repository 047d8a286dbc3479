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

#pragma once

#include <optional>
#include <vector>

#include "jadce/types.hpp"

namespace jadce {

/// Largest eigenvalue of A^T*A via power iteration on v -> A^T(A*v), without
/// forming the Gram matrix.  Converges when the eigen-residual drops below
/// rel_tol times the Rayleigh quotient; the returned value is the quotient
/// plus the residual norm, a slight overestimate, so step sizes derived as
/// 1/D never exceed 1/lambda_max.  Throws PowerIterationError (carrying the
/// last estimate) if the cap is hit.
double spectral_norm_sq(const Mat &a, double rel_tol = 1e-8, int max_iters = 10000);

struct IstaConfig {
    double reg_weight = 0.1;          // l2,1 penalty weight
    int max_iters = 100;
    std::optional<double> step;       // default 1/spectral_norm_sq(S)
    int trajectory_stride = 1;        // keep every stride-th iterate
    double rel_tol = 0.0;             // 0 disables early stopping

    void validate() const;
};

/// Iterates of a proximal-gradient run.  `estimates` holds the initial point
/// followed by every retained iterate; `objective` always covers all
/// iterations (initial point first).
struct IstaResult {
    std::vector<Mat> estimates;
    std::vector<double> objective;
    double step = 0.0;
    int iterations = 0;
};

/// Proximal gradient descent for the group-row-sparse program
///   min_X  0.5*||Y - S*X||_F^2 + reg_weight * sum_rows ||X_row||_2
/// starting from zero, with row-wise soft thresholding as the proximal map.
/// With the default step the objective sequence is non-increasing.
IstaResult ista_gs(const Mat &s_lift, const Mat &y_lift, const IstaConfig &cfg);

/// Objective value of the program above; accumulated in extended precision so
/// monotonicity checks are not drowned by summation noise.
double ista_objective(const Mat &s_lift, const Mat &y_lift, const Mat &x, double reg_weight);

/// Minimum-response-energy weights: rows solve
///   min ||b^T S||_2^2  s.t.  b^T s_i = 1
/// so the i-th row responds with unit gain to its own signature column and
/// minimal energy to the rest.  Requires S to have full row rank.
Mat analytic_weight_closed_form(const Mat &s_lift);

struct PgdConfig {
    int steps = 2000;
    std::optional<double> learning_rate; // default 1/(2*spectral_norm_sq(S))
};

/// Projected gradient descent for the same program: gradient steps on
/// ||B*S||_F^2 with per-row projection back onto the affine constraint.
Mat analytic_weight_pgd(const Mat &s_lift, const PgdConfig &cfg = {});

/// Mutual-response diagnostics of a weight/signature pair.
struct CoherenceReport {
    double phi_hat = 0.0;       // max off-diagonal |(B*S)_ij|
    double diag_max_dev = 0.0;  // max_i |(B*S)_ii - 1|
    double mu_b = 0.0;          // sum of row l2 norms of B
};

CoherenceReport coherence_report(const Mat &weights, const Mat &s_lift);

} // namespace jadce
