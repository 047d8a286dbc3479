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

#include <span>
#include <string>
#include <vector>

#include "jadce/model_gen.hpp"
#include "jadce/prox.hpp"
#include "jadce/types.hpp"

namespace jadce {

/// Unfolded recurrences.  All start from the zero estimate; layer k maps the
/// current estimate X through a linear update and a shrinkage activation.
///   lpom_gs    X' = P(W_k*X + B_k*Y)            trains W_k, B_k, theta, eta
///   lpomcp_gs  X' = P(X + B_k*(Y - S*X))        trains B_k, theta, eta
///   alpom_gs   X' = P(X + g_k*Bstar*(Y - S*X))  trains g_k, theta, eta
///   lista_gs   X' = H(X + B_k*(Y - S*X))        trains B_k, theta
/// where P is the concave-penalty activation and H the row soft threshold.
enum class Variant { lpom_gs, lpomcp_gs, alpom_gs, lista_gs };

Variant variant_from_string(const std::string &name);
std::string to_string(Variant v);
bool variant_uses_full_weight(Variant v);  // W_k
bool variant_uses_input_weight(Variant v); // B_k
bool variant_uses_step_size(Variant v);    // g_k
bool variant_uses_nonconvexity(Variant v); // eta_k

struct LayerParams {
    Mat full_weight;            // 2N x 2N
    Mat input_weight;           // 2N x 2L
    double step_size = 0.0;
    double threshold = 0.0;
    double nonconvexity = 0.0;
};

struct NetworkParams {
    Variant variant = Variant::lpomcp_gs;
    std::vector<LayerParams> layers;
    Mat analytic_weight; // frozen Bstar, alpom_gs only

    int depth() const { return static_cast<int>(layers.size()); }

    /// Throws when shapes are inconsistent across layers, a scalar is out of
    /// range, or an (eta, theta) pair violates eta < 1/(2*theta).
    void validate() const;
};

struct Trajectory {
    std::vector<Mat> estimates;      // depth+1, initial zero estimate first
    std::vector<Mat> preactivations; // depth, retained for backprop
};

/// Run the recurrence for `depth` layers (-1 for all).  Validates parameters
/// before any compute.
Trajectory forward(const NetworkParams &params, const Mat &s_lift, const Mat &y_lift,
                   int depth = -1);

/// Largest Frobenius deviation of the trained full weight from the residual
/// form it is initialized to, max_k ||W_k - (I - B_k*S)||_F.  Only defined
/// for lpom_gs; the other variants carry the residual structure exactly.
double coupling_check(const NetworkParams &params, const Mat &s_lift);

struct LayerGrads {
    Mat full_weight;
    Mat input_weight;
    double step_size = 0.0;
    double threshold = 0.0;
    double nonconvexity = 0.0;
};

struct Gradients {
    double loss = 0.0;
    std::vector<LayerGrads> layers;
};

/// Loss sum_i ||X_depth(Y_i) - Xtruth_i||_F^2 over the batch together with its
/// gradient for every trainable leaf, by backpropagation through the
/// recurrence.  Subgradient conventions at the activation kinks follow
/// mcp_prox_derivs; rows sitting exactly at a row-norm kink of the soft
/// threshold take the zero branch.  Samples accumulate into fixed-size blocks
/// in batch order and the block partials reduce in index order; the grouping
/// depends only on the batch size, so the result is bit-identical for any
/// worker count, while blocks evaluate on parallel threads.
Gradients grad_loss(const NetworkParams &params, const Mat &s_lift, std::span<const Sample> batch,
                    int depth = -1);

} // namespace jadce
