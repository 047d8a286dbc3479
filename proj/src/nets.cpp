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

#include "jadce/nets.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace jadce {

Variant variant_from_string(const std::string &name) {
    if (name == "lpom_gs" || name == "lpom")
        return Variant::lpom_gs;
    if (name == "lpomcp_gs" || name == "lpomcp")
        return Variant::lpomcp_gs;
    if (name == "alpom_gs" || name == "alpom")
        return Variant::alpom_gs;
    if (name == "lista_gs" || name == "lista")
        return Variant::lista_gs;
    throw_invalid("unknown network variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::lpom_gs:
        return "lpom_gs";
    case Variant::lpomcp_gs:
        return "lpomcp_gs";
    case Variant::alpom_gs:
        return "alpom_gs";
    case Variant::lista_gs:
        return "lista_gs";
    }
    return "?";
}

bool variant_uses_full_weight(Variant v) { return v == Variant::lpom_gs; }

bool variant_uses_input_weight(Variant v) { return v != Variant::alpom_gs; }

bool variant_uses_step_size(Variant v) { return v == Variant::alpom_gs; }

bool variant_uses_nonconvexity(Variant v) { return v != Variant::lista_gs; }

void NetworkParams::validate() const {
    if (layers.empty())
        throw_invalid("network must have at least one layer");
    Eigen::Index rows = -1, cols = -1;
    if (variant == Variant::alpom_gs) {
        if (analytic_weight.size() == 0)
            throw_invalid("alpom_gs requires the frozen analytic weight");
        rows = analytic_weight.rows();
        cols = analytic_weight.cols();
    }
    for (size_t k = 0; k < layers.size(); ++k) {
        const LayerParams &lp = layers[k];
        std::string at = " at layer " + std::to_string(k);
        if (variant_uses_input_weight(variant)) {
            if (lp.input_weight.size() == 0)
                throw_invalid("missing input weight" + at);
            if (rows < 0) {
                rows = lp.input_weight.rows();
                cols = lp.input_weight.cols();
            }
            if (lp.input_weight.rows() != rows || lp.input_weight.cols() != cols)
                throw_dims("inconsistent input weight shape" + at);
            require_finite(lp.input_weight, "input weight");
        }
        if (variant_uses_full_weight(variant)) {
            if (lp.full_weight.rows() != rows || lp.full_weight.cols() != rows)
                throw_dims("full weight must be square with the estimate dimension" + at);
            require_finite(lp.full_weight, "full weight");
        }
        if (variant_uses_step_size(variant) && !(lp.step_size > 0.0))
            throw_invalid("step size must be positive" + at);
        if (!std::isfinite(lp.threshold) || lp.threshold < 0.0)
            throw_invalid("threshold must be finite and >= 0" + at);
        if (variant_uses_nonconvexity(variant)) {
            McpParams mcp{lp.threshold, lp.nonconvexity};
            mcp.validate();
        }
    }
}

namespace {

void check_forward_dims(const NetworkParams &p, const Mat &s_lift, const Mat &y_lift) {
    const LayerParams &l0 = p.layers.front();
    const Mat &b = variant_uses_input_weight(p.variant) ? l0.input_weight : p.analytic_weight;
    if (b.cols() != y_lift.rows())
        throw_dims("weight columns must match measurement rows");
    if (p.variant != Variant::lpom_gs) {
        if (s_lift.rows() != y_lift.rows() || s_lift.cols() != b.rows())
            throw_dims("signature shape does not match weights and measurements");
    }
}

int resolve_depth(const NetworkParams &p, int depth) {
    if (depth < 0)
        return p.depth();
    if (depth > p.depth())
        throw_invalid("requested depth exceeds the network depth");
    return depth;
}

Mat layer_preactivation(const NetworkParams &p, int k, const Mat &s_lift, const Mat &y_lift,
                        const Mat &x) {
    const LayerParams &lp = p.layers[static_cast<size_t>(k)];
    switch (p.variant) {
    case Variant::lpom_gs:
        return lp.full_weight * x + lp.input_weight * y_lift;
    case Variant::lpomcp_gs:
    case Variant::lista_gs:
        return x + lp.input_weight * (y_lift - s_lift * x);
    case Variant::alpom_gs:
        return x + lp.step_size * (p.analytic_weight * (y_lift - s_lift * x));
    }
    throw_invalid("unknown network variant");
}

Mat layer_activation(const NetworkParams &p, int k, const Mat &pre) {
    const LayerParams &lp = p.layers[static_cast<size_t>(k)];
    if (p.variant == Variant::lista_gs)
        return group_soft_threshold(pre, lp.threshold);
    return mcp_prox(pre, McpParams{lp.threshold, lp.nonconvexity});
}

} // namespace

Trajectory forward(const NetworkParams &params, const Mat &s_lift, const Mat &y_lift, int depth) {
    params.validate();
    check_forward_dims(params, s_lift, y_lift);
    int d = resolve_depth(params, depth);

    Trajectory traj;
    Eigen::Index est_rows = variant_uses_input_weight(params.variant)
                                ? params.layers.front().input_weight.rows()
                                : params.analytic_weight.rows();
    traj.estimates.reserve(static_cast<size_t>(d) + 1);
    traj.preactivations.reserve(static_cast<size_t>(d));
    traj.estimates.push_back(Mat::Zero(est_rows, y_lift.cols()));
    for (int k = 0; k < d; ++k) {
        Mat pre = layer_preactivation(params, k, s_lift, y_lift, traj.estimates.back());
        traj.estimates.push_back(layer_activation(params, k, pre));
        traj.preactivations.push_back(std::move(pre));
    }
    return traj;
}

double coupling_check(const NetworkParams &params, const Mat &s_lift) {
    if (params.variant != Variant::lpom_gs)
        throw_invalid("coupling_check is only defined for lpom_gs");
    params.validate();
    Eigen::Index n = params.layers.front().full_weight.rows();
    double worst = 0.0;
    for (const LayerParams &lp : params.layers) {
        Mat residual_form = Mat::Identity(n, n) - lp.input_weight * s_lift;
        worst = std::max(worst, (lp.full_weight - residual_form).norm());
    }
    return worst;
}

namespace {

// Pulls the loss gradient back through the activation of layer k, writing the
// pre-activation gradient into g (in place) and accumulating the scalar
// activation-parameter gradients.
void backprop_activation(const NetworkParams &p, int k, const Mat &pre, Mat &g, LayerGrads &lg) {
    const LayerParams &lp = p.layers[static_cast<size_t>(k)];
    if (p.variant == Variant::lista_gs) {
        for (Eigen::Index i = 0; i < pre.rows(); ++i) {
            double n = pre.row(i).norm();
            if (n <= lp.threshold) {
                g.row(i).setZero();
                continue;
            }
            double dot = pre.row(i).dot(g.row(i));
            g.row(i) = (1.0 - lp.threshold / n) * g.row(i) +
                       (lp.threshold * dot / (n * n * n)) * pre.row(i);
            lg.threshold -= dot / n;
        }
        return;
    }
    McpParams mcp{lp.threshold, lp.nonconvexity};
    for (Eigen::Index j = 0; j < pre.cols(); ++j) {
        for (Eigen::Index i = 0; i < pre.rows(); ++i) {
            McpProxDerivs d = mcp_prox_derivs(pre(i, j), mcp);
            double gij = g(i, j);
            lg.threshold += gij * d.dthreshold;
            lg.nonconvexity += gij * d.dnonconvexity;
            g(i, j) = gij * d.du;
        }
    }
}

} // namespace

namespace {

Gradients zero_gradients(const NetworkParams &params) {
    Gradients out;
    out.layers.resize(params.layers.size());
    for (size_t k = 0; k < params.layers.size(); ++k) {
        if (variant_uses_full_weight(params.variant))
            out.layers[k].full_weight =
                Mat::Zero(params.layers[k].full_weight.rows(), params.layers[k].full_weight.cols());
        if (variant_uses_input_weight(params.variant))
            out.layers[k].input_weight = Mat::Zero(params.layers[k].input_weight.rows(),
                                                   params.layers[k].input_weight.cols());
    }
    return out;
}

void accumulate_sample(Gradients &out, const NetworkParams &params, const Mat &s_lift,
                       const Sample &sample, int d) {
    Trajectory traj = forward(params, s_lift, sample.y_lift, d);
    if (sample.x_lift.rows() != traj.estimates.back().rows() ||
        sample.x_lift.cols() != traj.estimates.back().cols())
        throw_dims("ground truth shape does not match the network output");

    Mat diff = traj.estimates.back() - sample.x_lift;
    out.loss += diff.squaredNorm();
    Mat g = 2.0 * diff;

    for (int k = d - 1; k >= 0; --k) {
        LayerGrads &lg = out.layers[static_cast<size_t>(k)];
        const LayerParams &lp = params.layers[static_cast<size_t>(k)];
        const Mat &x_in = traj.estimates[static_cast<size_t>(k)];

        backprop_activation(params, k, traj.preactivations[static_cast<size_t>(k)], g, lg);

        switch (params.variant) {
        case Variant::lpom_gs:
            lg.full_weight.noalias() += g * x_in.transpose();
            lg.input_weight.noalias() += g * sample.y_lift.transpose();
            g = lp.full_weight.transpose() * g;
            break;
        case Variant::lpomcp_gs:
        case Variant::lista_gs: {
            Mat residual = sample.y_lift - s_lift * x_in;
            lg.input_weight.noalias() += g * residual.transpose();
            g -= s_lift.transpose() * (lp.input_weight.transpose() * g);
            break;
        }
        case Variant::alpom_gs: {
            Mat weighted = params.analytic_weight * (sample.y_lift - s_lift * x_in);
            lg.step_size += (g.array() * weighted.array()).sum();
            g -= lp.step_size * (s_lift.transpose() * (params.analytic_weight.transpose() * g));
            break;
        }
        }
    }
}

// Samples per reduction block.  The grouping depends only on the batch size,
// never on the worker count, so the summation tree (and therefore every bit
// of the result) is identical on any machine.
constexpr size_t grad_block = 8;

} // namespace

Gradients grad_loss(const NetworkParams &params, const Mat &s_lift, std::span<const Sample> batch,
                    int depth) {
    params.validate();
    if (batch.empty())
        throw_invalid("gradient needs a nonempty batch");
    int d = resolve_depth(params, depth);

    size_t nblocks = (batch.size() + grad_block - 1) / grad_block;
    std::vector<Gradients> partial(nblocks);
    auto run_block = [&](size_t b) {
        Gradients &acc = partial[b];
        acc = zero_gradients(params);
        size_t hi = std::min(batch.size(), (b + 1) * grad_block);
        for (size_t i = b * grad_block; i < hi; ++i)
            accumulate_sample(acc, params, s_lift, batch[i], d);
    };

    size_t workers = std::min<size_t>(nblocks, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (size_t b = 0; b < nblocks; ++b)
            run_block(b);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w]() {
                try {
                    for (size_t b = w; b < nblocks; b += workers)
                        run_block(b);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (std::thread &t : pool)
            t.join();
        for (const std::exception_ptr &e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    Gradients out = partial.front();
    for (size_t b = 1; b < nblocks; ++b) {
        out.loss += partial[b].loss;
        for (size_t k = 0; k < out.layers.size(); ++k) {
            LayerGrads &dst = out.layers[k];
            const LayerGrads &src = partial[b].layers[k];
            if (variant_uses_full_weight(params.variant))
                dst.full_weight += src.full_weight;
            if (variant_uses_input_weight(params.variant))
                dst.input_weight += src.input_weight;
            dst.step_size += src.step_size;
            dst.threshold += src.threshold;
            dst.nonconvexity += src.nonconvexity;
        }
    }
    return out;
}

} // namespace jadce
