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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jadce/nets.hpp"

namespace jadce {

struct TrainConfig {
    int layers = 16;            // network depth K
    int batch_size = 64;        // samples per optimizer step; >= split size means full batch
    int val_samples = 8;        // held out from the tail of the training set
    double learning_rate = 5e-4;
    double finetune_lr_mult = 0.2; // stage-B learning rate multiplier
    int epochs_per_stage = 200;
    double margin = 0.05;       // clamp slack for the nonconvexity projection
    double init_nonconvexity_level = 0.1;   // 2*theta*eta at initialization
    std::optional<double> reg_weight0;      // base threshold scale; default from data
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;     // only consumed when mini-batching shuffles

    void validate() const;
};

/// Data-driven default for the base regularization scale: one tenth of the
/// largest row l2 norm of B0*Y, averaged over the batch, where B0 is the
/// matched filter the first layer is initialized with.
double default_reg_weight0(const Mat &b0, std::span<const Sample> batch);

/// All-layer initialization at the classical iteration: with D the spectral
/// norm squared of S and g = 1/D,
///   B_k = g*S^T, W_k = I - B_k*S, theta_k = reg_weight0*g,
///   eta_k = init_level/(2*theta_k).
/// alpom_gs instead freezes Bstar (closed form), starts its trainable step at
/// 1 (the natural scale, since Bstar*S has a unit diagonal), and scales
/// theta accordingly.
NetworkParams init_params(Variant variant, const Mat &s_lift, int layers, double reg_weight0,
                          double init_nonconvexity_level = 0.1);

/// Clamp every layer back into the valid region after an optimizer step:
/// theta_k >= 1e-8, 0 <= eta_k <= (1 - margin)/(2*theta_k), and the alpom_gs
/// step size into (0, max_step_size].  Idempotent.
void project_constraints(NetworkParams &params, double margin = 0.05,
                         double max_step_size = 10.0);

/// One optimizer stage of the layer-wise schedule.
struct StageRecord {
    int stage = 0;                  // 0-based position in the 2K schedule
    int depth = 0;                  // layers active during this stage
    std::string phase;              // "layer" (new layer only) or "finetune" (all so far)
    std::vector<double> train_loss; // loss before each update, then the final loss
    double best_loss = 0.0;
    double val_nmse_db = 0.0;       // validation NMSE at `depth` after the stage
};

struct Checkpoint {
    int schema_version = 1;
    NetworkParams params;
    TrainConfig config;
    std::uint64_t signature_hash = 0;
    int completed_stages = 0; // out of 2*layers
    std::vector<StageRecord> history;
    bool aborted = false;
    std::string abort_reason;
};

/// Raised when training hits a non-finite loss; carries a diagnostic
/// checkpoint holding the best finite parameters of the failed stage.
class TrainAbortError : public Error {
  public:
    TrainAbortError(const std::string &what, Checkpoint diagnostic)
        : Error(ErrorCode::numerical, what), checkpoint_(std::move(diagnostic)) {}
    const Checkpoint &checkpoint() const noexcept { return checkpoint_; }

  private:
    Checkpoint checkpoint_;
};

/// Layer-wise training: for k = 1..K first fit layer k's parameters on the
/// depth-k loss, then fine-tune all layers up to k at a reduced rate.  Layer
/// k > 1 is warm-started from the trained layer k-1, so each stage refines an
/// operator that already contracts the error instead of re-climbing from the
/// initialization.  Each stage runs Adam for epochs_per_stage full passes and
/// keeps the best training-loss iterate, so the depth-k loss never ends a
/// stage above its starting value.  The last `val_samples` of the dataset are
/// held out and
/// only used for the per-stage validation metric.  Deterministic: retraining
/// with the same inputs yields a bit-identical checkpoint.  Pass `resume` to
/// continue an interrupted schedule from its first incomplete stage.
Checkpoint train_layerwise(Variant variant, const Dataset &train_data, const TrainConfig &cfg,
                           const Checkpoint *resume = nullptr);

/// Per-epoch loss table of a checkpoint: stage,depth,phase,epoch,train_loss.
std::string loss_history_csv(const Checkpoint &cp);

} // namespace jadce
