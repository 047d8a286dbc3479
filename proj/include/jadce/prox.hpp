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

#include "jadce/types.hpp"

namespace jadce {

/// Parameters of the minimax concave penalty and its proximal activation.
/// Invariant: threshold >= 0, nonconvexity >= 0, and when threshold > 0 the
/// pair must satisfy nonconvexity < 1/(2*threshold), which keeps the scalar
/// proximal objective strongly convex on the shrinkage branch.
struct McpParams {
    double threshold = 0.0;    // dead-zone half width
    double nonconvexity = 0.0; // concavity of the penalty; 0 recovers soft thresholding

    void validate() const;

    /// Slope of the shrinkage branch, 1/(1 - 2*threshold*nonconvexity).
    /// Computed once per layer and shared across all entries.
    double expansion() const { return 1.0 / (1.0 - 2.0 * threshold * nonconvexity); }
};

/// Minimax concave penalty of a scalar: |x| - c*x^2 inside the saturation
/// radius 1/(2c), constant 1/(4c) outside.  Requires nonconvexity > 0; the
/// c -> 0 limit is |x| and is handled by the callers that admit it.
double mcp_penalty(double x, double nonconvexity);

/// Scalar proximal activation of the minimax concave penalty:
///   0                                   if |u| <= threshold
///   (u - threshold*sign(u)) * expansion if threshold < |u| <= 1/(2*nonconvexity)
///   u                                   if |u| > 1/(2*nonconvexity)
/// Odd in u and continuous across both branch boundaries.
double mcp_prox_scalar(double u, const McpParams &p);

/// Partial derivatives of the activation at input u.  Branch conventions at
/// the kinks: |u| == threshold belongs to the dead zone (all zero), and
/// |u| == 1/(2*nonconvexity) belongs to the pass-through branch (du = 1).
struct McpProxDerivs {
    double du = 0.0;
    double dthreshold = 0.0;
    double dnonconvexity = 0.0;
};
McpProxDerivs mcp_prox_derivs(double u, const McpParams &p);

/// Entrywise proximal activation of a matrix of pre-activations.
Mat mcp_prox(const Mat &pre, const McpParams &p);

/// Brute-force grid argmin of the scalar proximal objective
///   threshold * penalty(x) + (x - u)^2 / 2
/// over [u - grid_halfwidth, u + grid_halfwidth].  Independent of the closed
/// form above; accurate to within one grid step.  Callers must pick
/// grid_step <= 1e-4 * max(1, |u|) and a halfwidth that covers 0 and u.
double prox_oracle(double u, const McpParams &p, double grid_halfwidth, double grid_step);

/// Row-wise soft threshold: each row is shrunk towards zero by `threshold` in
/// l2 norm and zeroed when its norm does not exceed the threshold.
Mat group_soft_threshold(const Mat &x, double threshold);

} // namespace jadce
