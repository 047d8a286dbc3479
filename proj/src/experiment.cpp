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

#include "jadce/experiment.hpp"

#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>

#include "jadce/eval.hpp"
#include "jadce/io.hpp"
#include "jadce/rng.hpp"

namespace jadce {

using json = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
    system.validate();
    train.validate();
    if (kind == SignatureKind::conditioned && !(kappa >= 1.0))
        throw_invalid("conditioned signatures require kappa >= 1");
    if (train_samples < 1 || test_samples < 1)
        throw_invalid("sample counts must be positive");
    if (train.val_samples >= train_samples)
        throw_invalid("validation split must leave at least one training sample");
    if (variants.empty())
        throw_invalid("at least one network variant is required");
    if (ista.iterations < 1)
        throw_invalid("baseline iteration count must be >= 1");
    if (ista.reg_weight_factors.empty())
        throw_invalid("baseline grid must be nonempty");
    if (sweep && sweep->values.empty())
        throw_invalid("sweep values must be nonempty");
    if (activity_threshold && !(*activity_threshold >= 0.0))
        throw_invalid("activity threshold must be >= 0");
}

namespace {

json parse_json(const std::string &text, const char *what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::schema, std::string(what) + " is not valid JSON");
    return j;
}

void reject_unknown(const json &j, const std::set<std::string> &known, const char *what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key()))
            throw Error(ErrorCode::schema,
                        std::string("unknown field '") + it.key() + "' in " + what);
}

double snr_from_json(const json &j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf")
            return std::numeric_limits<double>::infinity();
        throw Error(ErrorCode::schema, "snr_db must be a number or \"inf\"");
    }
    return j.get<double>();
}

json snr_to_json(double v) {
    if (std::isinf(v))
        return "inf";
    return v;
}

template <typename T> void maybe(const json &j, const char *key, T &out) {
    auto it = j.find(key);
    if (it != j.end())
        out = it->get<T>();
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string &json_text) {
    json j = parse_json(json_text, "experiment config");
    reject_unknown(j,
                   {"system", "signature", "data", "train", "variants", "ista",
                    "activity_threshold", "sweep"},
                   "experiment config");
    ExperimentConfig cfg;

    if (j.contains("system")) {
        const json &s = j["system"];
        reject_unknown(s, {"symbols", "devices", "antennas", "p_active", "snr_db", "seed"},
                       "system");
        maybe(s, "symbols", cfg.system.num_symbols);
        maybe(s, "devices", cfg.system.num_devices);
        maybe(s, "antennas", cfg.system.num_antennas);
        maybe(s, "p_active", cfg.system.p_active);
        if (s.contains("snr_db"))
            cfg.system.snr_db = snr_from_json(s["snr_db"]);
        maybe(s, "seed", cfg.system.seed);
    }
    if (j.contains("signature")) {
        const json &s = j["signature"];
        reject_unknown(s, {"kind", "kappa"}, "signature");
        if (s.contains("kind"))
            cfg.kind = signature_kind_from_string(s["kind"].get<std::string>());
        maybe(s, "kappa", cfg.kappa);
    }
    if (j.contains("data")) {
        const json &s = j["data"];
        reject_unknown(s, {"train_samples", "test_samples"}, "data");
        maybe(s, "train_samples", cfg.train_samples);
        maybe(s, "test_samples", cfg.test_samples);
    }
    if (j.contains("train")) {
        const json &s = j["train"];
        reject_unknown(s,
                       {"layers", "batch_size", "val_samples", "learning_rate",
                        "finetune_lr_mult", "epochs_per_stage", "margin",
                        "init_nonconvexity_level", "reg_weight0", "adam_beta1", "adam_beta2",
                        "adam_eps", "seed"},
                       "train");
        maybe(s, "layers", cfg.train.layers);
        maybe(s, "batch_size", cfg.train.batch_size);
        maybe(s, "val_samples", cfg.train.val_samples);
        maybe(s, "learning_rate", cfg.train.learning_rate);
        maybe(s, "finetune_lr_mult", cfg.train.finetune_lr_mult);
        maybe(s, "epochs_per_stage", cfg.train.epochs_per_stage);
        maybe(s, "margin", cfg.train.margin);
        maybe(s, "init_nonconvexity_level", cfg.train.init_nonconvexity_level);
        if (s.contains("reg_weight0") && !s["reg_weight0"].is_null())
            cfg.train.reg_weight0 = s["reg_weight0"].get<double>();
        maybe(s, "adam_beta1", cfg.train.adam_beta1);
        maybe(s, "adam_beta2", cfg.train.adam_beta2);
        maybe(s, "adam_eps", cfg.train.adam_eps);
        maybe(s, "seed", cfg.train.seed);
    }
    if (j.contains("variants")) {
        cfg.variants.clear();
        for (const json &v : j["variants"])
            cfg.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (j.contains("ista")) {
        const json &s = j["ista"];
        reject_unknown(s, {"iterations", "reg_weight_factors"}, "ista");
        maybe(s, "iterations", cfg.ista.iterations);
        if (s.contains("reg_weight_factors"))
            cfg.ista.reg_weight_factors = s["reg_weight_factors"].get<std::vector<double>>();
    }
    if (j.contains("activity_threshold") && !j["activity_threshold"].is_null())
        cfg.activity_threshold = j["activity_threshold"].get<double>();
    if (j.contains("sweep") && !j["sweep"].is_null()) {
        const json &s = j["sweep"];
        reject_unknown(s, {"axis", "values"}, "sweep");
        SweepSpec sw;
        sw.axis = s.at("axis").get<std::string>();
        sw.values = s.at("values").get<std::vector<double>>();
        cfg.sweep = std::move(sw);
    }
    cfg.validate();
    return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig &cfg) {
    json j;
    j["system"] = {{"symbols", cfg.system.num_symbols},
                   {"devices", cfg.system.num_devices},
                   {"antennas", cfg.system.num_antennas},
                   {"p_active", cfg.system.p_active},
                   {"snr_db", snr_to_json(cfg.system.snr_db)},
                   {"seed", cfg.system.seed}};
    j["signature"] = {{"kind", to_string(cfg.kind)}, {"kappa", cfg.kappa}};
    j["data"] = {{"train_samples", cfg.train_samples}, {"test_samples", cfg.test_samples}};
    j["train"] = {{"layers", cfg.train.layers},
                  {"batch_size", cfg.train.batch_size},
                  {"val_samples", cfg.train.val_samples},
                  {"learning_rate", cfg.train.learning_rate},
                  {"finetune_lr_mult", cfg.train.finetune_lr_mult},
                  {"epochs_per_stage", cfg.train.epochs_per_stage},
                  {"margin", cfg.train.margin},
                  {"init_nonconvexity_level", cfg.train.init_nonconvexity_level},
                  {"reg_weight0",
                   cfg.train.reg_weight0 ? json(*cfg.train.reg_weight0) : json(nullptr)},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"seed", cfg.train.seed}};
    json variants = json::array();
    for (Variant v : cfg.variants)
        variants.push_back(to_string(v));
    j["variants"] = std::move(variants);
    j["ista"] = {{"iterations", cfg.ista.iterations},
                 {"reg_weight_factors", cfg.ista.reg_weight_factors}};
    j["activity_threshold"] =
        cfg.activity_threshold ? json(*cfg.activity_threshold) : json(nullptr);
    if (cfg.sweep)
        j["sweep"] = {{"axis", cfg.sweep->axis}, {"values", cfg.sweep->values}};
    else
        j["sweep"] = nullptr;
    return j.dump(1);
}

Dataset generate_split(const ExperimentConfig &cfg, bool test_split) {
    cfg.validate();
    CMat signature = gen_signature(cfg.kind, cfg.system.num_symbols, cfg.system.num_devices,
                                   cfg.system.seed, cfg.kappa);
    std::uint64_t domain = test_split ? stream_domain::test_sample : stream_domain::train_sample;
    int count = test_split ? cfg.test_samples : cfg.train_samples;
    return gen_dataset(signature, cfg.kind, cfg.kappa, cfg.system, domain, count);
}

IstaPick pick_ista_reg_weight(const Mat &s_lift, std::span<const Sample> val_batch,
                              const IstaBaselineConfig &cfg) {
    if (val_batch.empty())
        throw_invalid("baseline grid search needs a nonempty validation batch");
    double scale = 0.0;
    for (const Sample &s : val_batch) {
        Mat v = s_lift.transpose() * s.y_lift;
        double row_max = 0.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            row_max = std::max(row_max, v.row(i).norm());
        scale += row_max;
    }
    scale /= static_cast<double>(val_batch.size());

    double step = 1.0 / spectral_norm_sq(s_lift);
    IstaPick best;
    best.val_nmse_db = std::numeric_limits<double>::infinity();
    for (double factor : cfg.reg_weight_factors) {
        IstaConfig icfg;
        icfg.reg_weight = factor * scale;
        icfg.max_iters = cfg.iterations;
        icfg.step = step;
        std::vector<Mat> est, truth;
        for (const Sample &s : val_batch) {
            est.push_back(ista_gs(s_lift, s.y_lift, icfg).estimates.back());
            truth.push_back(s.x_lift);
        }
        double v = nmse_db(est, truth);
        if (v < best.val_nmse_db) {
            best.val_nmse_db = v;
            best.reg_weight = icfg.reg_weight;
        }
    }
    return best;
}

namespace {

// Accumulates layer-indexed batch metrics from per-sample trajectories.
struct MetricsAccumulator {
    explicit MetricsAccumulator(int layers, double tau)
        : tau_(tau), err_(static_cast<size_t>(layers) + 1, 0.0),
          ref_(static_cast<size_t>(layers) + 1, 0.0),
          psi_l1_(static_cast<size_t>(layers) + 1, 0.0),
          support_ok_(static_cast<size_t>(layers) + 1, true),
          miss_(static_cast<size_t>(layers) + 1, 0), fa_(static_cast<size_t>(layers) + 1, 0) {}

    void add(std::span<const Mat> estimates, const Sample &sample) {
        if (estimates.size() != err_.size())
            throw_dims("trajectory depth does not match the accumulator");
        ++count_;
        for (size_t k = 0; k < estimates.size(); ++k) {
            const Mat &e = estimates[k];
            err_[k] += (e - sample.x_lift).squaredNorm();
            ref_[k] += sample.x_lift.squaredNorm();
            for (Eigen::Index r = 0; r < e.rows(); ++r)
                psi_l1_[k] += std::abs(e.row(r).norm() - sample.x_lift.row(r).norm());
            if (!support_contained(e, sample.x_lift))
                support_ok_[k] = false;
            DetectionCounts dc = detection_counts(e, sample.activity, tau_);
            miss_[k] += dc.misses;
            fa_[k] += dc.false_alarms;
        }
    }

    MethodMetrics finish(const std::string &name) const {
        MethodMetrics m;
        m.name = name;
        for (size_t k = 0; k < err_.size(); ++k) {
            if (ref_[k] == 0.0)
                throw_numerical("NMSE is undefined for an all-zero ground-truth batch");
            m.nmse_db.push_back(err_[k] == 0.0 ? exact_recovery_db
                                               : 10.0 * std::log10(err_[k] / ref_[k]));
            Eigen::Index rows = rows_;
            m.error_rate.push_back(psi_l1_[k] /
                                   (static_cast<double>(count_) * static_cast<double>(rows)));
            m.support_ok.push_back(support_ok_[k]);
            m.misses.push_back(miss_[k]);
            m.false_alarms.push_back(fa_[k]);
        }
        return m;
    }

    double tau_;
    int count_ = 0;
    Eigen::Index rows_ = 0;
    std::vector<double> err_, ref_, psi_l1_;
    std::vector<bool> support_ok_;
    std::vector<long> miss_, fa_;
};

} // namespace

EvalResult evaluate_experiment(const ExperimentConfig &cfg, const Dataset &train_data,
                               const Dataset &test_data,
                               const std::vector<const Checkpoint *> &checkpoints) {
    cfg.validate();
    if (test_data.samples.empty())
        throw_invalid("test split is empty");
    if (train_data.signature_hash() != test_data.signature_hash())
        throw Error(ErrorCode::hash_mismatch, "train and test splits use different signatures");

    EvalResult out;
    out.activity_tau = cfg.activity_threshold
                           ? *cfg.activity_threshold
                           : default_activity_threshold(train_data.samples);

    const Mat &s_lift = test_data.s_lift;

    for (const Checkpoint *cp : checkpoints) {
        if (cp == nullptr)
            throw_invalid("null checkpoint");
        if (cp->signature_hash != test_data.signature_hash())
            throw Error(ErrorCode::hash_mismatch,
                        "checkpoint " + to_string(cp->params.variant) +
                            " was trained against a different signature");
        MetricsAccumulator acc(cp->params.depth(), out.activity_tau);
        acc.rows_ = s_lift.cols();
        for (const Sample &s : test_data.samples) {
            Trajectory traj = forward(cp->params, s_lift, s.y_lift);
            acc.add(traj.estimates, s);
        }
        out.methods.push_back(acc.finish(to_string(cp->params.variant)));
    }

    // Classical baseline; penalty weight picked on the held-out validation
    // tail of the training split.
    int val_count = std::min(cfg.train.val_samples, static_cast<int>(train_data.samples.size()));
    std::span<const Sample> val_batch(
        train_data.samples.data() + (train_data.samples.size() - static_cast<size_t>(val_count)),
        static_cast<size_t>(val_count));
    IstaPick pick = pick_ista_reg_weight(s_lift, val_batch, cfg.ista);
    IstaConfig icfg;
    icfg.reg_weight = pick.reg_weight;
    icfg.max_iters = cfg.ista.iterations;
    icfg.step = 1.0 / spectral_norm_sq(s_lift);
    MetricsAccumulator acc(cfg.ista.iterations, out.activity_tau);
    acc.rows_ = s_lift.cols();
    for (const Sample &s : test_data.samples) {
        IstaResult res = ista_gs(s_lift, s.y_lift, icfg);
        acc.add(res.estimates, s);
    }
    MethodMetrics ista_metrics = acc.finish("ista_gs");
    ista_metrics.extra = pick.reg_weight;
    out.methods.push_back(std::move(ista_metrics));

    // Plot-ready CSV, one row per method and layer.
    std::ostringstream csv;
    csv << "variant,snr_db,L,N,M,kappa,seed,layer,nmse_db,error_rate,support_ok,miss,"
           "false_alarm\n";
    for (const MethodMetrics &m : out.methods) {
        for (size_t k = 0; k < m.nmse_db.size(); ++k) {
            csv << m.name << ',' << format_double(cfg.system.snr_db) << ','
                << cfg.system.num_symbols << ',' << cfg.system.num_devices << ','
                << cfg.system.num_antennas << ',' << format_double(cfg.kappa) << ','
                << cfg.system.seed << ',' << k << ',' << format_double(m.nmse_db[k]) << ','
                << format_double(m.error_rate[k]) << ',' << (m.support_ok[k] ? 1 : 0) << ','
                << m.misses[k] << ',' << m.false_alarms[k] << '\n';
        }
    }
    out.metrics_csv = csv.str();

    json summary;
    summary["config"] = json::parse(experiment_config_to_json(cfg));
    summary["activity_threshold"] = out.activity_tau;
    json methods = json::object();
    for (const MethodMetrics &m : out.methods) {
        json mj;
        mj["final_nmse_db"] = m.nmse_db.back();
        mj["final_error_rate"] = m.error_rate.back();
        mj["support_ok_all_layers"] =
            std::all_of(m.support_ok.begin(), m.support_ok.end(), [](bool b) { return b; });
        try {
            RateFit fit = fit_linear_rate(m.nmse_db, m.nmse_db.back());
            mj["rate_fit"] = {{"slope_db_per_layer", fit.slope_db_per_layer},
                              {"c1", fit.c1},
                              {"r2", fit.r2},
                              {"used_layers", fit.used_layers}};
        } catch (const Error &) {
            mj["rate_fit"] = nullptr;
        }
        if (m.name == "ista_gs")
            mj["reg_weight"] = m.extra;
        methods[m.name] = std::move(mj);
    }
    summary["methods"] = std::move(methods);
    out.summary_json = summary.dump(1);
    return out;
}

} // namespace jadce
