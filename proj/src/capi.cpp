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

#include "jadce/jadce.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <memory>
#include <new>
#include <string>

#include "jadce/containers.hpp"
#include "jadce/eval.hpp"
#include "jadce/experiment.hpp"
#include "jadce/nets.hpp"
#include "jadce/rng.hpp"
#include "jadce/training.hpp"
#include "jadce/verify.hpp"

struct jadce_dataset {
    jadce::Dataset data;
    std::uint64_t split_domain = 0;
};

struct jadce_checkpoint {
    jadce::Checkpoint cp;
};

namespace {

thread_local std::string g_last_error;

jadce_status map_code(jadce::ErrorCode code) {
    switch (code) {
    case jadce::ErrorCode::invalid_argument: return JADCE_ERR_INVALID_ARGUMENT;
    case jadce::ErrorCode::dimension_mismatch: return JADCE_ERR_DIMENSION_MISMATCH;
    case jadce::ErrorCode::numerical: return JADCE_ERR_NUMERICAL;
    case jadce::ErrorCode::io: return JADCE_ERR_IO;
    case jadce::ErrorCode::schema: return JADCE_ERR_SCHEMA;
    case jadce::ErrorCode::hash_mismatch: return JADCE_ERR_HASH_MISMATCH;
    case jadce::ErrorCode::internal: return JADCE_ERR_INTERNAL;
    }
    return JADCE_ERR_INTERNAL;
}

jadce_status fail(jadce_status status, const char *message) {
    g_last_error = message;
    return status;
}

template <typename Fn> jadce_status guarded(Fn &&fn) {
    try {
        fn();
        return JADCE_OK;
    } catch (const jadce::Error &e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::bad_alloc &) {
        g_last_error = "out of memory";
        return JADCE_ERR_INTERNAL;
    } catch (const std::exception &e) {
        g_last_error = e.what();
        return JADCE_ERR_INTERNAL;
    }
}

char *dup_string(const std::string &s) {
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (out == nullptr)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char *jadce_version(void) { return "0.1.0"; }

const char *jadce_status_name(jadce_status status) {
    switch (status) {
    case JADCE_OK: return "ok";
    case JADCE_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case JADCE_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case JADCE_ERR_NUMERICAL: return "numerical";
    case JADCE_ERR_IO: return "io";
    case JADCE_ERR_SCHEMA: return "schema";
    case JADCE_ERR_HASH_MISMATCH: return "hash_mismatch";
    case JADCE_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char *jadce_last_error(void) { return g_last_error.c_str(); }

void jadce_string_free(char *s) { std::free(s); }
void jadce_buffer_free(double *buf) { std::free(buf); }

jadce_status jadce_config_normalize(const char *config_json, char **out_json) {
    if (config_json == nullptr || out_json == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out_json = nullptr;
    return guarded([&] {
        jadce::ExperimentConfig cfg = jadce::parse_experiment_config(config_json);
        *out_json = dup_string(jadce::experiment_config_to_json(cfg));
    });
}

jadce_status jadce_dataset_generate(const char *config_json, int test_split,
                                    jadce_dataset **out) {
    if (config_json == nullptr || out == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        jadce::ExperimentConfig cfg = jadce::parse_experiment_config(config_json);
        auto handle = std::make_unique<jadce_dataset>();
        handle->data = jadce::generate_split(cfg, test_split != 0);
        handle->split_domain = test_split != 0 ? jadce::stream_domain::test_sample
                                               : jadce::stream_domain::train_sample;
        *out = handle.release();
    });
}

jadce_status jadce_dataset_load(const char *path, jadce_dataset **out) {
    if (path == nullptr || out == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        jadce::LoadedDataset loaded = jadce::load_dataset(path);
        auto handle = std::make_unique<jadce_dataset>();
        handle->data = std::move(loaded.dataset);
        handle->split_domain = loaded.split_domain;
        *out = handle.release();
    });
}

jadce_status jadce_dataset_save(const jadce_dataset *ds, const char *path) {
    if (ds == nullptr || path == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { jadce::save_dataset(ds->data, ds->split_domain, path); });
}

jadce_status jadce_dataset_summary(const jadce_dataset *ds, char **out_json) {
    if (ds == nullptr || out_json == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out_json = nullptr;
    return guarded([&] {
        const jadce::Dataset &d = ds->data;
        long active_total = 0;
        long active_min = d.config.num_devices, active_max = 0;
        double realized_snr_sum = 0.0;
        int noisy = 0;
        for (const jadce::Sample &s : d.samples) {
            long active = 0;
            for (std::uint8_t a : s.activity)
                active += a;
            active_total += active;
            active_min = std::min(active_min, active);
            active_max = std::max(active_max, active);
            if (s.sigma2 > 0.0) {
                double signal = (d.s_lift * s.x_lift).squaredNorm();
                double denom = s.sigma2 * d.config.num_symbols * d.config.num_antennas;
                if (signal > 0.0 && denom > 0.0) {
                    realized_snr_sum += 10.0 * std::log10(signal / denom);
                    ++noisy;
                }
            }
        }
        nlohmann::ordered_json j;
        j["symbols"] = d.config.num_symbols;
        j["devices"] = d.config.num_devices;
        j["antennas"] = d.config.num_antennas;
        j["samples"] = d.samples.size();
        j["signature"] = {{"kind", jadce::to_string(d.kind)},
                          {"kappa", d.kappa},
                          {"hash", jadce::hash_to_string(d.signature_hash())}};
        j["active_devices"] = {
            {"mean", d.samples.empty()
                         ? 0.0
                         : static_cast<double>(active_total) /
                               static_cast<double>(d.samples.size())},
            {"min", d.samples.empty() ? 0 : active_min},
            {"max", active_max}};
        j["realized_snr_db"] =
            noisy > 0 ? nlohmann::ordered_json(realized_snr_sum / noisy)
                      : nlohmann::ordered_json(nullptr);
        *out_json = dup_string(j.dump(1));
    });
}

void jadce_dataset_free(jadce_dataset *ds) { delete ds; }

jadce_status jadce_train(const char *config_json, const char *variant,
                         const jadce_dataset *train_data, const jadce_checkpoint *resume,
                         jadce_checkpoint **out) {
    if (config_json == nullptr || variant == nullptr || train_data == nullptr || out == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        jadce::ExperimentConfig cfg = jadce::parse_experiment_config(config_json);
        jadce::Variant v = jadce::variant_from_string(variant);
        auto handle = std::make_unique<jadce_checkpoint>();
        handle->cp = jadce::train_layerwise(v, train_data->data, cfg.train,
                                            resume != nullptr ? &resume->cp : nullptr);
        *out = handle.release();
    });
}

jadce_status jadce_checkpoint_load(const char *path, jadce_checkpoint **out) {
    if (path == nullptr || out == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto handle = std::make_unique<jadce_checkpoint>();
        handle->cp = jadce::load_checkpoint(path);
        *out = handle.release();
    });
}

jadce_status jadce_checkpoint_save(const jadce_checkpoint *cp, const char *path) {
    if (cp == nullptr || path == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { jadce::save_checkpoint(cp->cp, path); });
}

jadce_status jadce_checkpoint_info(const jadce_checkpoint *cp, char **out_json) {
    if (cp == nullptr || out_json == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out_json = nullptr;
    return guarded([&] {
        const jadce::Checkpoint &c = cp->cp;
        nlohmann::ordered_json j;
        j["variant"] = jadce::to_string(c.params.variant);
        j["layers"] = c.params.depth();
        j["completed_stages"] = c.completed_stages;
        j["signature_hash"] = jadce::hash_to_string(c.signature_hash);
        j["aborted"] = c.aborted;
        if (c.aborted)
            j["abort_reason"] = c.abort_reason;
        nlohmann::ordered_json stages = nlohmann::ordered_json::array();
        for (const jadce::StageRecord &st : c.history) {
            stages.push_back({{"stage", st.stage},
                              {"depth", st.depth},
                              {"phase", st.phase},
                              {"best_loss", st.best_loss},
                              {"val_nmse_db", std::isnan(st.val_nmse_db)
                                                  ? nlohmann::ordered_json(nullptr)
                                                  : nlohmann::ordered_json(st.val_nmse_db)}});
        }
        j["stages"] = std::move(stages);
        *out_json = dup_string(j.dump(1));
    });
}

jadce_status jadce_checkpoint_loss_csv(const jadce_checkpoint *cp, char **out_csv) {
    if (cp == nullptr || out_csv == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out_csv = nullptr;
    return guarded([&] { *out_csv = dup_string(jadce::loss_history_csv(cp->cp)); });
}

void jadce_checkpoint_free(jadce_checkpoint *cp) { delete cp; }

jadce_status jadce_evaluate(const char *config_json, const jadce_dataset *train_data,
                            const jadce_dataset *test_data,
                            const jadce_checkpoint *const *checkpoints, size_t n_checkpoints,
                            char **out_metrics_csv, char **out_summary_json) {
    if (config_json == nullptr || train_data == nullptr || test_data == nullptr ||
        (checkpoints == nullptr && n_checkpoints != 0))
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    if (out_metrics_csv != nullptr)
        *out_metrics_csv = nullptr;
    if (out_summary_json != nullptr)
        *out_summary_json = nullptr;
    return guarded([&] {
        jadce::ExperimentConfig cfg = jadce::parse_experiment_config(config_json);
        std::vector<const jadce::Checkpoint *> cps;
        for (size_t i = 0; i < n_checkpoints; ++i) {
            if (checkpoints[i] == nullptr)
                jadce::throw_invalid("null checkpoint handle");
            cps.push_back(&checkpoints[i]->cp);
        }
        jadce::EvalResult res =
            jadce::evaluate_experiment(cfg, train_data->data, test_data->data, cps);
        if (out_metrics_csv != nullptr)
            *out_metrics_csv = dup_string(res.metrics_csv);
        if (out_summary_json != nullptr)
            *out_summary_json = dup_string(res.summary_json);
    });
}

jadce_status jadce_forward(const jadce_checkpoint *cp, const jadce_dataset *ds,
                           size_t sample_index, int depth, double **out_estimate,
                           size_t *out_rows, size_t *out_cols) {
    if (cp == nullptr || ds == nullptr || out_estimate == nullptr || out_rows == nullptr ||
        out_cols == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out_estimate = nullptr;
    *out_rows = *out_cols = 0;
    return guarded([&] {
        if (sample_index >= ds->data.samples.size())
            jadce::throw_invalid("sample index out of range");
        if (cp->cp.signature_hash != ds->data.signature_hash())
            throw jadce::Error(jadce::ErrorCode::hash_mismatch,
                               "checkpoint was trained against a different signature");
        jadce::Trajectory traj = jadce::forward(
            cp->cp.params, ds->data.s_lift, ds->data.samples[sample_index].y_lift, depth);
        const jadce::Mat &est = traj.estimates.back();
        auto bytes = static_cast<size_t>(est.size()) * sizeof(double);
        auto *buf = static_cast<double *>(std::malloc(bytes));
        if (buf == nullptr)
            throw std::bad_alloc();
        std::memcpy(buf, est.data(), bytes);
        *out_estimate = buf;
        *out_rows = static_cast<size_t>(est.rows());
        *out_cols = static_cast<size_t>(est.cols());
    });
}

jadce_status jadce_detect_activity(const double *x_lift, size_t rows, size_t cols, double tau,
                                   uint8_t *out_active) {
    if (x_lift == nullptr || out_active == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    if (rows == 0 || rows % 2 != 0 || cols == 0)
        return fail(JADCE_ERR_DIMENSION_MISMATCH, "lifted estimate needs an even, positive row count");
    return guarded([&] {
        Eigen::Map<const jadce::Mat> m(x_lift, static_cast<Eigen::Index>(rows),
                                       static_cast<Eigen::Index>(cols));
        std::vector<std::uint8_t> active = jadce::detect_activity(m, tau);
        std::memcpy(out_active, active.data(), active.size());
    });
}

jadce_status jadce_verify(char **out_report) {
    if (out_report == nullptr)
        return fail(JADCE_ERR_INVALID_ARGUMENT, "null argument");
    *out_report = nullptr;
    bool ok = false;
    jadce_status status = guarded([&] {
        std::vector<jadce::CheckResult> results = jadce::run_verification();
        ok = jadce::all_checks_passed(results);
        *out_report = dup_string(jadce::format_verification_report(results));
    });
    if (status != JADCE_OK)
        return status;
    if (!ok)
        return fail(JADCE_ERR_NUMERICAL, "one or more self checks failed");
    return JADCE_OK;
}

} // extern "C"
