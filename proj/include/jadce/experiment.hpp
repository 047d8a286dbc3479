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
#include <string>
#include <vector>

#include "jadce/containers.hpp"
#include "jadce/solvers.hpp"

namespace jadce {

struct IstaBaselineConfig {
    int iterations = 10;
    /// Grid of penalty weights, as factors of the mean max-row norm of S^T*Y
    /// over the validation split; the factor with the best final validation
    /// NMSE wins.
    std::vector<double> reg_weight_factors = {0.01, 0.05, 0.1, 0.5};
};

struct SweepSpec {
    std::string axis; // snr_db, symbols, devices, antennas, p_active, kappa, seed
    std::vector<double> values;
};

/// One experiment, fully determined by this config plus nothing else.
struct ExperimentConfig {
    SystemConfig system;
    SignatureKind kind = SignatureKind::gaussian;
    double kappa = 1.0;
    int train_samples = 64;
    int test_samples = 1000;
    TrainConfig train;
    std::vector<Variant> variants = {Variant::lpomcp_gs, Variant::lista_gs};
    IstaBaselineConfig ista;
    std::optional<double> activity_threshold; // default calibrated on training data
    std::optional<SweepSpec> sweep;

    void validate() const;
};

/// Parse / render the JSON config format.  Absent fields take the defaults
/// above; unknown fields are rejected so typos cannot silently change an
/// experiment.
ExperimentConfig parse_experiment_config(const std::string &json_text);
std::string experiment_config_to_json(const ExperimentConfig &cfg);

/// Generate the train or test split of the experiment (shared signature,
/// distinct sample streams).
Dataset generate_split(const ExperimentConfig &cfg, bool test_split);

struct IstaPick {
    double reg_weight = 0.0;
    double val_nmse_db = 0.0;
};

/// Grid-search the ISTA penalty weight on a validation batch.
IstaPick pick_ista_reg_weight(const Mat &s_lift, std::span<const Sample> val_batch,
                              const IstaBaselineConfig &cfg);

/// Per-layer metrics of one method on one test set.
struct MethodMetrics {
    std::string name;
    std::vector<double> nmse_db;      // layer 0..K
    std::vector<double> error_rate;   // layer 0..K
    std::vector<bool> support_ok;     // layer 0..K, all samples contained
    std::vector<long> misses;         // layer 0..K
    std::vector<long> false_alarms;   // layer 0..K
    double extra = 0.0;               // method-specific (ISTA: chosen reg weight)
};

struct EvalResult {
    std::vector<MethodMetrics> methods;
    double activity_tau = 0.0;
    std::string metrics_csv;  // variant,snr_db,L,N,M,kappa,seed,layer,...
    std::string summary_json;
};

/// Evaluate checkpoints plus the classical baseline on the test split.  The
/// training split provides the detection-threshold calibration and the
/// validation batch for the baseline's penalty grid search.  Checkpoints must
/// match the dataset signature hash.
EvalResult evaluate_experiment(const ExperimentConfig &cfg, const Dataset &train_data,
                               const Dataset &test_data,
                               const std::vector<const Checkpoint *> &checkpoints);

} // namespace jadce
