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

#include "jadce/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "jadce/eval.hpp"
#include "jadce/io.hpp"
#include "jadce/rng.hpp"
#include "jadce/solvers.hpp"

namespace jadce {

namespace {
// Trainable step sizes stay within one decade of their natural unit scale;
// the frozen analytic weight already responds with unit gain to a matched
// signature column.
constexpr double max_trainable_step = 10.0;
constexpr std::uint64_t shuffle_domain = 4;
} // namespace

void TrainConfig::validate() const {
    if (layers < 1)
        throw_invalid("network depth must be >= 1");
    if (batch_size < 1)
        throw_invalid("batch_size must be >= 1");
    if (val_samples < 0)
        throw_invalid("val_samples must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw_invalid("learning_rate must be positive");
    if (!(finetune_lr_mult > 0.0))
        throw_invalid("finetune_lr_mult must be positive");
    if (epochs_per_stage < 1)
        throw_invalid("epochs_per_stage must be >= 1");
    if (!(margin > 0.0 && margin < 1.0))
        throw_invalid("margin must lie in (0, 1)");
    if (!(init_nonconvexity_level >= 0.0 && init_nonconvexity_level < 1.0))
        throw_invalid("init_nonconvexity_level must lie in [0, 1)");
    if (reg_weight0 && (!(*reg_weight0 >= 0.0) || !std::isfinite(*reg_weight0)))
        throw_invalid("reg_weight0 must be finite and >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw_invalid("adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0))
        throw_invalid("adam_eps must be positive");
}

double default_reg_weight0(const Mat &b0, std::span<const Sample> batch) {
    if (batch.empty())
        throw_invalid("reg_weight0 calibration needs a nonempty batch");
    double acc = 0.0;
    for (const Sample &s : batch) {
        Mat v = b0 * s.y_lift;
        double row_max = 0.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            row_max = std::max(row_max, v.row(i).norm());
        acc += row_max;
    }
    return 0.1 * acc / static_cast<double>(batch.size());
}

NetworkParams init_params(Variant variant, const Mat &s_lift, int layers, double reg_weight0,
                          double init_nonconvexity_level) {
    if (layers < 1)
        throw_invalid("network depth must be >= 1");
    if (!(reg_weight0 >= 0.0) || !std::isfinite(reg_weight0))
        throw_invalid("reg_weight0 must be finite and >= 0");
    if (!(init_nonconvexity_level >= 0.0 && init_nonconvexity_level < 1.0))
        throw_invalid("init_nonconvexity_level must lie in [0, 1)");

    NetworkParams p;
    p.variant = variant;
    LayerParams proto;
    if (variant == Variant::alpom_gs) {
        p.analytic_weight = analytic_weight_closed_form(s_lift);
        proto.step_size = 1.0;
        proto.threshold = std::max(reg_weight0 * proto.step_size, 1e-8);
    } else {
        double gamma = 1.0 / spectral_norm_sq(s_lift);
        proto.input_weight = gamma * s_lift.transpose();
        if (variant == Variant::lpom_gs)
            proto.full_weight =
                Mat::Identity(s_lift.cols(), s_lift.cols()) - proto.input_weight * s_lift;
        proto.threshold = std::max(reg_weight0 * gamma, 1e-8);
    }
    if (variant_uses_nonconvexity(variant))
        proto.nonconvexity = init_nonconvexity_level / (2.0 * proto.threshold);
    p.layers.assign(static_cast<size_t>(layers), proto);
    p.validate();
    return p;
}

void project_constraints(NetworkParams &params, double margin, double max_step_size) {
    if (!(margin > 0.0 && margin < 1.0))
        throw_invalid("margin must lie in (0, 1)");
    if (!(max_step_size > 0.0))
        throw_invalid("max_step_size must be positive");
    for (LayerParams &lp : params.layers) {
        lp.threshold = std::max(lp.threshold, 1e-8);
        if (variant_uses_nonconvexity(params.variant)) {
            double cap = (1.0 - margin) / (2.0 * lp.threshold);
            lp.nonconvexity = std::clamp(lp.nonconvexity, 0.0, cap);
        }
        if (variant_uses_step_size(params.variant))
            lp.step_size = std::clamp(lp.step_size, 1e-12, max_step_size);
    }
}

namespace {

struct AdamLayerState {
    Mat m_full, v_full, m_in, v_in;
    double m_step = 0.0, v_step = 0.0;
    double m_th = 0.0, v_th = 0.0;
    double m_eta = 0.0, v_eta = 0.0;
};

void adam_update_mat(Mat &x, const Mat &g, Mat &m, Mat &v, double lr, const TrainConfig &cfg,
                     double bc1, double bc2) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = (cfg.adam_beta2 * v.array() + (1.0 - cfg.adam_beta2) * g.array().square()).matrix();
    x.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
}

void adam_update_scalar(double &x, double g, double &m, double &v, double lr,
                        const TrainConfig &cfg, double bc1, double bc2) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    x -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
}

// Applies one Adam step to the layers in [lo, hi].
void apply_update(NetworkParams &params, const Gradients &grads,
                  std::vector<AdamLayerState> &state, int lo, int hi, double lr,
                  const TrainConfig &cfg, long t) {
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    for (int k = lo; k <= hi; ++k) {
        LayerParams &lp = params.layers[static_cast<size_t>(k)];
        const LayerGrads &lg = grads.layers[static_cast<size_t>(k)];
        AdamLayerState &st = state[static_cast<size_t>(k)];
        if (variant_uses_full_weight(params.variant)) {
            if (st.m_full.size() == 0) {
                st.m_full = Mat::Zero(lp.full_weight.rows(), lp.full_weight.cols());
                st.v_full = st.m_full;
            }
            adam_update_mat(lp.full_weight, lg.full_weight, st.m_full, st.v_full, lr, cfg, bc1,
                            bc2);
        }
        if (variant_uses_input_weight(params.variant)) {
            if (st.m_in.size() == 0) {
                st.m_in = Mat::Zero(lp.input_weight.rows(), lp.input_weight.cols());
                st.v_in = st.m_in;
            }
            adam_update_mat(lp.input_weight, lg.input_weight, st.m_in, st.v_in, lr, cfg, bc1, bc2);
        }
        if (variant_uses_step_size(params.variant))
            adam_update_scalar(lp.step_size, lg.step_size, st.m_step, st.v_step, lr, cfg, bc1,
                               bc2);
        adam_update_scalar(lp.threshold, lg.threshold, st.m_th, st.v_th, lr, cfg, bc1, bc2);
        if (variant_uses_nonconvexity(params.variant))
            adam_update_scalar(lp.nonconvexity, lg.nonconvexity, st.m_eta, st.v_eta, lr, cfg, bc1,
                               bc2);
    }
}

double batch_loss(const NetworkParams &params, const Mat &s_lift, std::span<const Sample> batch,
                  int depth) {
    double loss = 0.0;
    for (const Sample &s : batch) {
        Trajectory traj = forward(params, s_lift, s.y_lift, depth);
        loss += (traj.estimates.back() - s.x_lift).squaredNorm();
    }
    return loss;
}

} // namespace

Checkpoint train_layerwise(Variant variant, const Dataset &train_data, const TrainConfig &cfg,
                           const Checkpoint *resume) {
    cfg.validate();
    int total = static_cast<int>(train_data.samples.size());
    if (cfg.val_samples >= total)
        throw_invalid("validation split must leave at least one training sample");
    int train_count = total - cfg.val_samples;
    std::span<const Sample> train_split(train_data.samples.data(),
                                        static_cast<size_t>(train_count));
    std::span<const Sample> val_split(train_data.samples.data() + train_count,
                                      static_cast<size_t>(cfg.val_samples));

    Checkpoint cp;
    if (resume) {
        if (resume->params.variant != variant)
            throw_invalid("resume checkpoint belongs to a different variant");
        if (resume->signature_hash != train_data.signature_hash())
            throw Error(ErrorCode::hash_mismatch,
                        "resume checkpoint was trained against a different signature");
        if (resume->params.depth() != cfg.layers)
            throw_invalid("resume checkpoint depth differs from the configured depth");
        cp = *resume;
        cp.config = cfg;
        cp.aborted = false;
        cp.abort_reason.clear();
        if (cp.completed_stages < static_cast<int>(cp.history.size()))
            cp.history.resize(static_cast<size_t>(cp.completed_stages));
    } else {
        cp.config = cfg;
        cp.signature_hash = train_data.signature_hash();
        double lambda0;
        if (cfg.reg_weight0) {
            lambda0 = *cfg.reg_weight0;
        } else {
            Mat b0 = (variant == Variant::alpom_gs)
                         ? analytic_weight_closed_form(train_data.s_lift)
                         : Mat(train_data.s_lift.transpose());
            lambda0 = default_reg_weight0(b0, train_split);
        }
        cp.params = init_params(variant, train_data.s_lift, cfg.layers, lambda0,
                                cfg.init_nonconvexity_level);
    }

    bool full_batch = cfg.batch_size >= train_count;
    int total_stages = 2 * cfg.layers;

    for (int stage = cp.completed_stages; stage < total_stages; ++stage) {
        int layer = stage / 2;
        bool finetune = (stage % 2) == 1;
        int depth = layer + 1;
        int lo = finetune ? 0 : layer;
        double lr = cfg.learning_rate * (finetune ? cfg.finetune_lr_mult : 1.0);

        // Warm-start each new layer from the trained one before it: the
        // previous layer already contracts the error, so stage A refines a
        // working operator instead of re-climbing from the initialization.
        if (!finetune && layer > 0)
            cp.params.layers[static_cast<size_t>(layer)] =
                cp.params.layers[static_cast<size_t>(layer - 1)];

        StageRecord rec;
        rec.stage = stage;
        rec.depth = depth;
        rec.phase = finetune ? "finetune" : "layer";

        std::vector<AdamLayerState> adam(cp.params.layers.size());
        NetworkParams best = cp.params;
        double best_loss = std::numeric_limits<double>::infinity();
        long t = 0;

        auto track = [&](double loss) {
            if (!std::isfinite(loss)) {
                if (std::isfinite(best_loss))
                    cp.params = best;
                cp.completed_stages = stage;
                cp.aborted = true;
                cp.abort_reason = "non-finite training loss in stage " + std::to_string(stage) +
                                  " (depth " + std::to_string(depth) + ", " + rec.phase + ")";
                cp.history.push_back(rec);
                throw TrainAbortError(cp.abort_reason, cp);
            }
            rec.train_loss.push_back(loss);
            if (loss < best_loss) {
                best_loss = loss;
                best = cp.params;
            }
        };

        if (full_batch) {
            for (int epoch = 0; epoch <= cfg.epochs_per_stage; ++epoch) {
                Gradients g = grad_loss(cp.params, train_data.s_lift, train_split, depth);
                track(g.loss);
                if (epoch == cfg.epochs_per_stage)
                    break;
                apply_update(cp.params, g, adam, lo, layer, lr, cfg, ++t);
                project_constraints(cp.params, cfg.margin, max_trainable_step);
            }
        } else {
            track(batch_loss(cp.params, train_data.s_lift, train_split, depth));
            std::vector<int> order(static_cast<size_t>(train_count));
            std::iota(order.begin(), order.end(), 0);
            std::vector<Sample> chunk;
            for (int epoch = 0; epoch < cfg.epochs_per_stage; ++epoch) {
                Rng rng = Rng::stream(cfg.seed, shuffle_domain,
                                      static_cast<std::uint64_t>(stage) * 100000u +
                                          static_cast<std::uint64_t>(epoch));
                for (int i = train_count - 1; i > 0; --i) {
                    int j = static_cast<int>(rng.uniform() * (i + 1));
                    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
                }
                for (int at = 0; at < train_count; at += cfg.batch_size) {
                    chunk.clear();
                    for (int i = at; i < std::min(at + cfg.batch_size, train_count); ++i)
                        chunk.push_back(train_data.samples[static_cast<size_t>(order[i])]);
                    Gradients g = grad_loss(cp.params, train_data.s_lift, chunk, depth);
                    if (!std::isfinite(g.loss))
                        track(g.loss); // aborts
                    apply_update(cp.params, g, adam, lo, layer, lr, cfg, ++t);
                    project_constraints(cp.params, cfg.margin, max_trainable_step);
                }
                track(batch_loss(cp.params, train_data.s_lift, train_split, depth));
            }
        }

        cp.params = best;
        rec.best_loss = best_loss;
        if (!val_split.empty()) {
            std::vector<Mat> est, truth;
            est.reserve(val_split.size());
            truth.reserve(val_split.size());
            for (const Sample &s : val_split) {
                est.push_back(forward(cp.params, train_data.s_lift, s.y_lift, depth)
                                  .estimates.back());
                truth.push_back(s.x_lift);
            }
            rec.val_nmse_db = nmse_db(est, truth);
        } else {
            rec.val_nmse_db = std::numeric_limits<double>::quiet_NaN();
        }
        cp.history.push_back(rec);
        cp.completed_stages = stage + 1;
    }
    return cp;
}

std::string loss_history_csv(const Checkpoint &cp) {
    std::ostringstream out;
    out << "stage,depth,phase,epoch,train_loss\n";
    for (const StageRecord &rec : cp.history)
        for (size_t e = 0; e < rec.train_loss.size(); ++e)
            out << rec.stage << ',' << rec.depth << ',' << rec.phase << ',' << e << ','
                << format_double(rec.train_loss[e]) << '\n';
    return out.str();
}

} // namespace jadce
