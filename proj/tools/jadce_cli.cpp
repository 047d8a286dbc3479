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

// Experiment harness over the shared-library C surface.  Subcommands:
//   gen-data   write the train/test splits of a config
//   train      layer-wise training of one variant
//   eval       metrics CSV + summary for checkpoints plus the baseline
//   verify     release-gate self checks
//   sweep      gen + train + eval per value of the configured sweep axis
// Every run is reproducible from (config, seed); rerunning writes identical
// CSV bytes.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jadce/jadce.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct StringOut {
    char *ptr = nullptr;
    StringOut() = default;
    StringOut(const StringOut &) = delete;
    StringOut &operator=(const StringOut &) = delete;
    ~StringOut() { jadce_string_free(ptr); }
    std::string str() const { return ptr != nullptr ? std::string(ptr) : std::string(); }
};

struct DatasetHandle {
    jadce_dataset *ptr = nullptr;
    DatasetHandle() = default;
    DatasetHandle(const DatasetHandle &) = delete;
    DatasetHandle &operator=(const DatasetHandle &) = delete;
    DatasetHandle(DatasetHandle &&o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
    ~DatasetHandle() { jadce_dataset_free(ptr); }
};

struct CheckpointHandle {
    jadce_checkpoint *ptr = nullptr;
    CheckpointHandle() = default;
    CheckpointHandle(const CheckpointHandle &) = delete;
    CheckpointHandle &operator=(const CheckpointHandle &) = delete;
    CheckpointHandle(CheckpointHandle &&o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
    ~CheckpointHandle() { jadce_checkpoint_free(ptr); }
};

[[noreturn]] void die(const std::string &message) {
    std::cerr << "error: " << message << "\n";
    std::exit(1);
}

std::string describe(jadce_status st, const std::string &context) {
    return context + ": " + jadce_status_name(st) + ": " + jadce_last_error();
}

void check(jadce_status st, const std::string &context) {
    if (st != JADCE_OK)
        die(describe(st, context));
}

std::string read_text_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        die("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const fs::path &path, const std::string &content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out)
            die("cannot write " + path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        die("cannot move " + tmp.string() + " into place: " + ec.message());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Effective config: file text (or "{}"), optional seed override, then
// normalization so downstream steps and the manifest see every field.
std::string load_config(const std::string &config_path, std::optional<std::uint64_t> seed) {
    std::string text = config_path.empty() ? std::string("{}") : read_text_file(config_path);
    if (seed) {
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded())
            die("config is not valid JSON: " + config_path);
        j["system"]["seed"] = *seed;
        text = j.dump();
    }
    StringOut normalized;
    check(jadce_config_normalize(text.c_str(), &normalized.ptr), "config");
    return normalized.str();
}

void write_manifest(const fs::path &out_dir, const std::string &command,
                    const std::string &config_json, const json &outputs, const json &timings) {
    json m;
    m["tool"] = "jadce";
    m["version"] = jadce_version();
    m["command"] = command;
    m["config"] = json::parse(config_json);
    m["outputs"] = outputs;
    m["timings_s"] = timings;
    write_text_file(out_dir / "manifest.json", m.dump(1) + "\n");
}

int cmd_gen_data(const std::string &config_path, std::optional<std::uint64_t> seed,
                 const fs::path &out_dir) {
    std::string cfg = load_config(config_path, seed);
    fs::create_directories(out_dir);
    json timings, outputs;

    auto t0 = std::chrono::steady_clock::now();
    DatasetHandle train, test;
    check(jadce_dataset_generate(cfg.c_str(), 0, &train.ptr), "generate train split");
    check(jadce_dataset_generate(cfg.c_str(), 1, &test.ptr), "generate test split");
    timings["generate"] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    fs::path train_path = out_dir / "train_data.json";
    fs::path test_path = out_dir / "test_data.json";
    check(jadce_dataset_save(train.ptr, train_path.string().c_str()), "save train split");
    check(jadce_dataset_save(test.ptr, test_path.string().c_str()), "save test split");
    timings["save"] = seconds_since(t0);
    outputs["train_data"] = train_path.string();
    outputs["test_data"] = test_path.string();

    for (auto [name, handle] : {std::pair<const char *, jadce_dataset *>{"train", train.ptr},
                                {"test", test.ptr}}) {
        StringOut summary;
        check(jadce_dataset_summary(handle, &summary.ptr), "summarize split");
        std::cout << name << " split:\n" << summary.str() << "\n";
    }
    write_manifest(out_dir, "gen-data", cfg, outputs, timings);
    return 0;
}

int cmd_train(const std::string &config_path, std::optional<std::uint64_t> seed,
              const fs::path &out_dir, const std::string &variant, const std::string &data_path,
              const std::string &resume_path) {
    std::string cfg = load_config(config_path, seed);
    fs::create_directories(out_dir);
    json timings, outputs;

    DatasetHandle train;
    auto t0 = std::chrono::steady_clock::now();
    if (!data_path.empty())
        check(jadce_dataset_load(data_path.c_str(), &train.ptr), "load train split");
    else
        check(jadce_dataset_generate(cfg.c_str(), 0, &train.ptr), "generate train split");
    timings["data"] = seconds_since(t0);

    CheckpointHandle resume;
    if (!resume_path.empty())
        check(jadce_checkpoint_load(resume_path.c_str(), &resume.ptr), "load resume checkpoint");

    t0 = std::chrono::steady_clock::now();
    CheckpointHandle cp;
    jadce_status st = jadce_train(cfg.c_str(), variant.c_str(), train.ptr, resume.ptr, &cp.ptr);
    timings["train"] = seconds_since(t0);
    if (st != JADCE_OK && cp.ptr != nullptr) {
        // Training aborted; keep the diagnostic checkpoint for inspection.
        fs::path diag = out_dir / (variant + "_abort_checkpoint.json");
        check(jadce_checkpoint_save(cp.ptr, diag.string().c_str()), "save diagnostic checkpoint");
        die(describe(st, "train") + " (diagnostic checkpoint: " + diag.string() + ")");
    }
    check(st, "train");
    std::cout << "trained " << variant << " in " << timings["train"].get<double>() << " s\n";

    fs::path cp_path = out_dir / (variant + "_checkpoint.json");
    check(jadce_checkpoint_save(cp.ptr, cp_path.string().c_str()), "save checkpoint");
    outputs["checkpoint"] = cp_path.string();

    StringOut loss_csv;
    check(jadce_checkpoint_loss_csv(cp.ptr, &loss_csv.ptr), "loss history");
    fs::path loss_path = out_dir / (variant + "_loss.csv");
    write_text_file(loss_path, loss_csv.str());
    outputs["loss_csv"] = loss_path.string();

    StringOut info;
    check(jadce_checkpoint_info(cp.ptr, &info.ptr), "checkpoint info");
    std::cout << info.str() << "\n";
    write_manifest(out_dir, "train", cfg, outputs, timings);
    return 0;
}

int cmd_eval(const std::string &config_path, std::optional<std::uint64_t> seed,
             const fs::path &out_dir, const std::string &train_path,
             const std::string &test_path, const std::vector<std::string> &checkpoint_paths) {
    std::string cfg = load_config(config_path, seed);
    fs::create_directories(out_dir);
    json timings, outputs;

    auto t0 = std::chrono::steady_clock::now();
    DatasetHandle train, test;
    if (!train_path.empty())
        check(jadce_dataset_load(train_path.c_str(), &train.ptr), "load train split");
    else
        check(jadce_dataset_generate(cfg.c_str(), 0, &train.ptr), "generate train split");
    if (!test_path.empty())
        check(jadce_dataset_load(test_path.c_str(), &test.ptr), "load test split");
    else
        check(jadce_dataset_generate(cfg.c_str(), 1, &test.ptr), "generate test split");
    timings["data"] = seconds_since(t0);

    std::vector<CheckpointHandle> handles;
    std::vector<const jadce_checkpoint *> ptrs;
    for (const std::string &path : checkpoint_paths) {
        CheckpointHandle h;
        check(jadce_checkpoint_load(path.c_str(), &h.ptr), "load checkpoint " + path);
        ptrs.push_back(h.ptr);
        handles.push_back(std::move(h));
    }

    t0 = std::chrono::steady_clock::now();
    StringOut csv, summary;
    check(jadce_evaluate(cfg.c_str(), train.ptr, test.ptr, ptrs.data(), ptrs.size(), &csv.ptr,
                         &summary.ptr),
          "evaluate");
    timings["evaluate"] = seconds_since(t0);

    fs::path csv_path = out_dir / "metrics.csv";
    fs::path summary_path = out_dir / "summary.json";
    write_text_file(csv_path, csv.str());
    write_text_file(summary_path, summary.str() + "\n");
    outputs["metrics_csv"] = csv_path.string();
    outputs["summary_json"] = summary_path.string();
    std::cout << summary.str() << "\n";
    write_manifest(out_dir, "eval", cfg, outputs, timings);
    return 0;
}

int cmd_verify() {
    StringOut report;
    jadce_status st = jadce_verify(&report.ptr);
    std::cout << report.str();
    if (st == JADCE_OK) {
        std::cout << "all checks passed\n";
        return 0;
    }
    if (report.ptr == nullptr)
        die(describe(st, "verify"));
    std::cerr << "self checks failed\n";
    return 1;
}

void apply_sweep_axis(json &cfg, const std::string &axis, double value) {
    if (axis == "snr_db")
        cfg["system"]["snr_db"] = value;
    else if (axis == "symbols")
        cfg["system"]["symbols"] = static_cast<int>(std::llround(value));
    else if (axis == "devices")
        cfg["system"]["devices"] = static_cast<int>(std::llround(value));
    else if (axis == "antennas")
        cfg["system"]["antennas"] = static_cast<int>(std::llround(value));
    else if (axis == "p_active")
        cfg["system"]["p_active"] = value;
    else if (axis == "kappa")
        cfg["signature"]["kappa"] = value;
    else if (axis == "seed")
        cfg["system"]["seed"] = static_cast<std::uint64_t>(std::llround(value));
    else
        die("unknown sweep axis: " + axis);
}

std::string format_cell_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// One sweep cell end to end.  Runs on a worker thread, so failures are
// returned as text instead of exiting.
std::string run_cell(const std::string &cfg, const fs::path &dir) {
    auto failed = [](jadce_status st, const std::string &ctx) {
        return describe(st, ctx);
    };
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        return "cannot create " + dir.string() + ": " + ec.message();

    DatasetHandle train, test;
    jadce_status st = jadce_dataset_generate(cfg.c_str(), 0, &train.ptr);
    if (st != JADCE_OK)
        return failed(st, "generate train split");
    st = jadce_dataset_generate(cfg.c_str(), 1, &test.ptr);
    if (st != JADCE_OK)
        return failed(st, "generate test split");

    std::vector<std::string> variants = json::parse(cfg)["variants"].get<std::vector<std::string>>();
    std::vector<CheckpointHandle> handles;
    std::vector<const jadce_checkpoint *> ptrs;
    for (const std::string &variant : variants) {
        CheckpointHandle cp;
        st = jadce_train(cfg.c_str(), variant.c_str(), train.ptr, nullptr, &cp.ptr);
        if (st != JADCE_OK)
            return failed(st, "train " + variant);
        fs::path cp_path = dir / (variant + "_checkpoint.json");
        st = jadce_checkpoint_save(cp.ptr, cp_path.string().c_str());
        if (st != JADCE_OK)
            return failed(st, "save checkpoint " + variant);
        StringOut loss_csv;
        st = jadce_checkpoint_loss_csv(cp.ptr, &loss_csv.ptr);
        if (st != JADCE_OK)
            return failed(st, "loss history " + variant);
        write_text_file(dir / (variant + "_loss.csv"), loss_csv.str());
        ptrs.push_back(cp.ptr);
        handles.push_back(std::move(cp));
    }

    StringOut csv, summary;
    st = jadce_evaluate(cfg.c_str(), train.ptr, test.ptr, ptrs.data(), ptrs.size(), &csv.ptr,
                        &summary.ptr);
    if (st != JADCE_OK)
        return failed(st, "evaluate");
    write_text_file(dir / "metrics.csv", csv.str());
    write_text_file(dir / "summary.json", summary.str() + "\n");
    return {};
}

int cmd_sweep(const std::string &config_path, std::optional<std::uint64_t> seed,
              const fs::path &out_dir, int jobs) {
    std::string cfg = load_config(config_path, seed);
    json base = json::parse(cfg);
    if (base["sweep"].is_null())
        die("config has no sweep axis");
    std::string axis = base["sweep"]["axis"].get<std::string>();
    std::vector<double> values = base["sweep"]["values"].get<std::vector<double>>();
    fs::create_directories(out_dir);

    std::vector<std::string> cell_cfgs;
    std::vector<fs::path> cell_dirs;
    for (double v : values) {
        json cell = base;
        cell["sweep"] = nullptr;
        apply_sweep_axis(cell, axis, v);
        StringOut normalized;
        check(jadce_config_normalize(cell.dump().c_str(), &normalized.ptr),
              "cell config " + axis + "=" + format_cell_value(v));
        cell_cfgs.push_back(normalized.str());
        cell_dirs.push_back(out_dir / "cells" / (axis + "_" + format_cell_value(v)));
    }

    auto t0 = std::chrono::steady_clock::now();
    std::atomic<size_t> next{0};
    std::vector<std::string> errors(values.size());
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= values.size())
                return;
            errors[i] = run_cell(cell_cfgs[i], cell_dirs[i]);
        }
    };
    int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back(worker);
    for (std::thread &t : pool)
        t.join();

    bool ok = true;
    for (size_t i = 0; i < values.size(); ++i) {
        if (!errors[i].empty()) {
            std::cerr << "cell " << axis << "=" << format_cell_value(values[i]) << ": "
                      << errors[i] << "\n";
            ok = false;
        } else {
            std::cout << "cell " << axis << "=" << format_cell_value(values[i]) << " done\n";
        }
    }
    if (!ok)
        return 1;

    // Deterministic merge in cell order regardless of worker scheduling.
    std::string merged;
    for (size_t i = 0; i < cell_dirs.size(); ++i) {
        std::string cell_csv = read_text_file(cell_dirs[i] / "metrics.csv");
        if (i == 0) {
            merged = cell_csv;
        } else {
            size_t nl = cell_csv.find('\n');
            merged += cell_csv.substr(nl + 1);
        }
    }
    write_text_file(out_dir / "metrics.csv", merged);

    json timings, outputs;
    timings["total"] = seconds_since(t0);
    outputs["metrics_csv"] = (out_dir / "metrics.csv").string();
    json cells = json::array();
    for (const fs::path &d : cell_dirs)
        cells.push_back(d.string());
    outputs["cells"] = std::move(cells);
    write_manifest(out_dir, "sweep", cfg, outputs, timings);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"joint activity detection and channel estimation harness"};
    app.require_subcommand(1);

    std::string config_path, variant, data_path, resume_path, train_path, test_path;
    std::vector<std::string> checkpoint_paths;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int jobs = 1;

    CLI::App *gen = app.add_subcommand("gen-data", "write the train/test splits of a config");
    gen->add_option("--config", config_path, "experiment config (JSON); omitted = defaults");
    gen->add_option("--seed", seed, "override the system seed");
    gen->add_option("--out", out_dir, "output directory");

    CLI::App *train = app.add_subcommand("train", "layer-wise training of one variant");
    train->add_option("--config", config_path, "experiment config (JSON); omitted = defaults");
    train->add_option("--variant", variant,
                      "network variant: lpom_gs, lpomcp_gs, alpom_gs, lista_gs")
        ->required();
    train->add_option("--seed", seed, "override the system seed");
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--data", data_path, "train-split file (omitted = generate from config)");
    train->add_option("--resume", resume_path, "continue an interrupted schedule");

    CLI::App *eval = app.add_subcommand("eval", "metrics for checkpoints plus the baseline");
    eval->add_option("--config", config_path, "experiment config (JSON); omitted = defaults");
    eval->add_option("--seed", seed, "override the system seed");
    eval->add_option("--out", out_dir, "output directory");
    eval->add_option("--data-train", train_path, "train-split file (omitted = generate)");
    eval->add_option("--data-test", test_path, "test-split file (omitted = generate)");
    eval->add_option("--checkpoint", checkpoint_paths, "checkpoint file (repeatable)");

    CLI::App *verify = app.add_subcommand("verify", "release-gate self checks");

    CLI::App *sweep = app.add_subcommand("sweep", "gen + train + eval over the sweep axis");
    sweep->add_option("--config", config_path, "experiment config with a sweep section")
        ->required();
    sweep->add_option("--seed", seed, "override the system seed");
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--jobs", jobs, "parallel sweep cells")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(gen))
        return cmd_gen_data(config_path, seed, out_dir);
    if (app.got_subcommand(train))
        return cmd_train(config_path, seed, out_dir, variant, data_path, resume_path);
    if (app.got_subcommand(eval))
        return cmd_eval(config_path, seed, out_dir, train_path, test_path, checkpoint_paths);
    if (app.got_subcommand(verify))
        return cmd_verify();
    if (app.got_subcommand(sweep))
        return cmd_sweep(config_path, seed, out_dir, jobs);
    return 1;
}
