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

#include "jadce/containers.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>

#include "jadce/io.hpp"

namespace jadce {

using json = nlohmann::ordered_json;

namespace {

constexpr const char *dataset_schema = "jadce.dataset.v1";
constexpr const char *checkpoint_schema = "jadce.checkpoint.v1";

json parse_json(const std::string &text, const char *what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::schema, std::string(what) + " is not valid JSON");
    return j;
}

const json &need(const json &j, const char *key, const char *what) {
    auto it = j.find(key);
    if (it == j.end())
        throw Error(ErrorCode::schema, std::string(what) + " is missing field '" + key + "'");
    return *it;
}

json matrix_to_json(const Mat &m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_matrix_payload(m)}};
}

Mat matrix_from_json(const json &j, const char *what) {
    Eigen::Index rows = need(j, "rows", what).get<Eigen::Index>();
    Eigen::Index cols = need(j, "cols", what).get<Eigen::Index>();
    return decode_matrix_payload(need(j, "data", what).get<std::string>(), rows, cols);
}

json snr_to_json(double snr_db) {
    if (std::isinf(snr_db))
        return "inf";
    return snr_db;
}

double snr_from_json(const json &j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf")
            return std::numeric_limits<double>::infinity();
        throw Error(ErrorCode::schema, "snr_db must be a number or \"inf\"");
    }
    return j.get<double>();
}

json system_to_json(const SystemConfig &cfg) {
    return json{{"symbols", cfg.num_symbols},   {"devices", cfg.num_devices},
                {"antennas", cfg.num_antennas}, {"p_active", cfg.p_active},
                {"snr_db", snr_to_json(cfg.snr_db)}, {"seed", cfg.seed}};
}

SystemConfig system_from_json(const json &j) {
    SystemConfig cfg;
    cfg.num_symbols = need(j, "symbols", "system config").get<int>();
    cfg.num_devices = need(j, "devices", "system config").get<int>();
    cfg.num_antennas = need(j, "antennas", "system config").get<int>();
    cfg.p_active = need(j, "p_active", "system config").get<double>();
    cfg.snr_db = snr_from_json(need(j, "snr_db", "system config"));
    cfg.seed = need(j, "seed", "system config").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

} // namespace

std::string hash_to_string(std::uint64_t hash) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::uint64_t hash_from_string(const std::string &text) {
    if (text.size() != 18 || text.rfind("0x", 0) != 0)
        throw Error(ErrorCode::schema, "malformed hash string: " + text);
    return std::stoull(text.substr(2), nullptr, 16);
}

void save_dataset(const Dataset &ds, std::uint64_t split_domain,
                  const std::filesystem::path &path) {
    json j;
    j["schema"] = dataset_schema;
    j["system"] = system_to_json(ds.config);
    json sig;
    sig["kind"] = to_string(ds.kind);
    sig["kappa"] = ds.kappa;
    sig["re"] = matrix_to_json(ds.signature.real());
    sig["im"] = matrix_to_json(ds.signature.imag());
    sig["hash"] = hash_to_string(ds.signature_hash());
    j["signature"] = std::move(sig);
    j["split_domain"] = split_domain;

    json samples = json::array();
    for (const Sample &s : ds.samples) {
        json sj;
        json active = json::array();
        for (size_t i = 0; i < s.activity.size(); ++i)
            if (s.activity[i])
                active.push_back(i);
        sj["active_devices"] = std::move(active);
        sj["sigma2"] = s.sigma2;
        sj["channel_re"] = matrix_to_json(s.channel.real());
        sj["channel_im"] = matrix_to_json(s.channel.imag());
        sj["y_lift"] = matrix_to_json(s.y_lift);
        samples.push_back(std::move(sj));
    }
    j["samples"] = std::move(samples);
    atomic_write_file(path, j.dump(1));
}

LoadedDataset load_dataset(const std::filesystem::path &path) {
    json j = parse_json(read_file(path), "dataset file");
    if (need(j, "schema", "dataset file").get<std::string>() != dataset_schema)
        throw Error(ErrorCode::schema, "unsupported dataset schema");

    LoadedDataset out;
    Dataset &ds = out.dataset;
    ds.config = system_from_json(need(j, "system", "dataset file"));
    const json &sig = need(j, "signature", "dataset file");
    ds.kind = signature_kind_from_string(need(sig, "kind", "signature").get<std::string>());
    ds.kappa = need(sig, "kappa", "signature").get<double>();
    Mat re = matrix_from_json(need(sig, "re", "signature"), "signature.re");
    Mat im = matrix_from_json(need(sig, "im", "signature"), "signature.im");
    if (re.rows() != im.rows() || re.cols() != im.cols())
        throw Error(ErrorCode::schema, "signature planes have mismatched shapes");
    ds.signature = CMat(re.rows(), re.cols());
    ds.signature.real() = re;
    ds.signature.imag() = im;
    ds.s_lift = lift_operator(ds.signature);
    std::uint64_t stored = hash_from_string(need(sig, "hash", "signature").get<std::string>());
    if (stored != ds.signature_hash())
        throw Error(ErrorCode::hash_mismatch, "signature payload does not match its stored hash");
    out.split_domain = need(j, "split_domain", "dataset file").get<std::uint64_t>();

    for (const json &sj : need(j, "samples", "dataset file")) {
        Sample s;
        s.activity.assign(static_cast<size_t>(ds.config.num_devices), 0);
        for (const json &idx : need(sj, "active_devices", "sample")) {
            size_t i = idx.get<size_t>();
            if (i >= s.activity.size())
                throw Error(ErrorCode::schema, "active device index out of range");
            s.activity[i] = 1;
        }
        s.sigma2 = need(sj, "sigma2", "sample").get<double>();
        Mat cre = matrix_from_json(need(sj, "channel_re", "sample"), "channel_re");
        Mat cim = matrix_from_json(need(sj, "channel_im", "sample"), "channel_im");
        if (cre.rows() != cim.rows() || cre.cols() != cim.cols())
            throw Error(ErrorCode::schema, "channel planes have mismatched shapes");
        s.channel = CMat(cre.rows(), cre.cols());
        s.channel.real() = cre;
        s.channel.imag() = cim;
        s.x_lift = lift_signal(s.channel);
        s.y_lift = matrix_from_json(need(sj, "y_lift", "sample"), "y_lift");
        if (s.y_lift.rows() != ds.s_lift.rows() || s.x_lift.rows() != ds.s_lift.cols())
            throw Error(ErrorCode::schema, "sample dimensions do not match the signature");
        ds.samples.push_back(std::move(s));
    }
    return out;
}

namespace {

json train_config_to_json(const TrainConfig &cfg) {
    json j;
    j["layers"] = cfg.layers;
    j["batch_size"] = cfg.batch_size;
    j["val_samples"] = cfg.val_samples;
    j["learning_rate"] = cfg.learning_rate;
    j["finetune_lr_mult"] = cfg.finetune_lr_mult;
    j["epochs_per_stage"] = cfg.epochs_per_stage;
    j["margin"] = cfg.margin;
    j["init_nonconvexity_level"] = cfg.init_nonconvexity_level;
    j["reg_weight0"] = cfg.reg_weight0 ? json(*cfg.reg_weight0) : json(nullptr);
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["adam_eps"] = cfg.adam_eps;
    j["seed"] = cfg.seed;
    return j;
}

TrainConfig train_config_from_json(const json &j) {
    TrainConfig cfg;
    cfg.layers = need(j, "layers", "train config").get<int>();
    cfg.batch_size = need(j, "batch_size", "train config").get<int>();
    cfg.val_samples = need(j, "val_samples", "train config").get<int>();
    cfg.learning_rate = need(j, "learning_rate", "train config").get<double>();
    cfg.finetune_lr_mult = need(j, "finetune_lr_mult", "train config").get<double>();
    cfg.epochs_per_stage = need(j, "epochs_per_stage", "train config").get<int>();
    cfg.margin = need(j, "margin", "train config").get<double>();
    cfg.init_nonconvexity_level = need(j, "init_nonconvexity_level", "train config").get<double>();
    const json &rw = need(j, "reg_weight0", "train config");
    if (!rw.is_null())
        cfg.reg_weight0 = rw.get<double>();
    cfg.adam_beta1 = need(j, "adam_beta1", "train config").get<double>();
    cfg.adam_beta2 = need(j, "adam_beta2", "train config").get<double>();
    cfg.adam_eps = need(j, "adam_eps", "train config").get<double>();
    cfg.seed = need(j, "seed", "train config").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

} // namespace

void save_checkpoint(const Checkpoint &cp, const std::filesystem::path &path) {
    cp.params.validate();
    json j;
    j["schema"] = checkpoint_schema;
    j["schema_version"] = cp.schema_version;
    j["variant"] = to_string(cp.params.variant);
    j["layers"] = cp.params.depth();
    j["signature_hash"] = hash_to_string(cp.signature_hash);
    j["completed_stages"] = cp.completed_stages;
    j["aborted"] = cp.aborted;
    j["abort_reason"] = cp.abort_reason;
    j["config"] = train_config_to_json(cp.config);
    if (cp.params.variant == Variant::alpom_gs)
        j["analytic_weight"] = matrix_to_json(cp.params.analytic_weight);

    json layers = json::array();
    for (const LayerParams &lp : cp.params.layers) {
        json lj;
        if (variant_uses_full_weight(cp.params.variant))
            lj["full_weight"] = matrix_to_json(lp.full_weight);
        if (variant_uses_input_weight(cp.params.variant))
            lj["input_weight"] = matrix_to_json(lp.input_weight);
        if (variant_uses_step_size(cp.params.variant))
            lj["step_size"] = lp.step_size;
        lj["threshold"] = lp.threshold;
        if (variant_uses_nonconvexity(cp.params.variant))
            lj["nonconvexity"] = lp.nonconvexity;
        layers.push_back(std::move(lj));
    }
    j["layer_params"] = std::move(layers);

    json hist = json::array();
    for (const StageRecord &rec : cp.history) {
        json rj;
        rj["stage"] = rec.stage;
        rj["depth"] = rec.depth;
        rj["phase"] = rec.phase;
        rj["best_loss"] = rec.best_loss;
        rj["val_nmse_db"] = std::isfinite(rec.val_nmse_db) ? json(rec.val_nmse_db) : json(nullptr);
        rj["train_loss"] = rec.train_loss;
        hist.push_back(std::move(rj));
    }
    j["history"] = std::move(hist);
    atomic_write_file(path, j.dump(1));
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    json j = parse_json(read_file(path), "checkpoint file");
    if (need(j, "schema", "checkpoint file").get<std::string>() != checkpoint_schema)
        throw Error(ErrorCode::schema, "unsupported checkpoint schema");

    Checkpoint cp;
    cp.schema_version = need(j, "schema_version", "checkpoint file").get<int>();
    cp.params.variant =
        variant_from_string(need(j, "variant", "checkpoint file").get<std::string>());
    int layers = need(j, "layers", "checkpoint file").get<int>();
    cp.signature_hash =
        hash_from_string(need(j, "signature_hash", "checkpoint file").get<std::string>());
    cp.completed_stages = need(j, "completed_stages", "checkpoint file").get<int>();
    cp.aborted = need(j, "aborted", "checkpoint file").get<bool>();
    cp.abort_reason = need(j, "abort_reason", "checkpoint file").get<std::string>();
    cp.config = train_config_from_json(need(j, "config", "checkpoint file"));
    if (cp.params.variant == Variant::alpom_gs)
        cp.params.analytic_weight =
            matrix_from_json(need(j, "analytic_weight", "checkpoint file"), "analytic_weight");

    const json &lps = need(j, "layer_params", "checkpoint file");
    if (static_cast<int>(lps.size()) != layers)
        throw Error(ErrorCode::schema, "layer count does not match the layer parameter array");
    for (const json &lj : lps) {
        LayerParams lp;
        if (variant_uses_full_weight(cp.params.variant))
            lp.full_weight = matrix_from_json(need(lj, "full_weight", "layer"), "full_weight");
        if (variant_uses_input_weight(cp.params.variant))
            lp.input_weight = matrix_from_json(need(lj, "input_weight", "layer"), "input_weight");
        if (variant_uses_step_size(cp.params.variant))
            lp.step_size = need(lj, "step_size", "layer").get<double>();
        lp.threshold = need(lj, "threshold", "layer").get<double>();
        if (variant_uses_nonconvexity(cp.params.variant))
            lp.nonconvexity = need(lj, "nonconvexity", "layer").get<double>();
        cp.params.layers.push_back(std::move(lp));
    }

    for (const json &rj : need(j, "history", "checkpoint file")) {
        StageRecord rec;
        rec.stage = need(rj, "stage", "history").get<int>();
        rec.depth = need(rj, "depth", "history").get<int>();
        rec.phase = need(rj, "phase", "history").get<std::string>();
        rec.best_loss = need(rj, "best_loss", "history").get<double>();
        const json &vn = need(rj, "val_nmse_db", "history");
        rec.val_nmse_db =
            vn.is_null() ? std::numeric_limits<double>::quiet_NaN() : vn.get<double>();
        rec.train_loss = need(rj, "train_loss", "history").get<std::vector<double>>();
        cp.history.push_back(std::move(rec));
    }

    cp.params.validate();
    return cp;
}

} // namespace jadce
