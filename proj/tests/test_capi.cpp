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

// Exercises the shared-library C surface exactly as an external caller
// would: through status codes, out-parameters, and opaque handles.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "jadce/jadce.h"

namespace fs = std::filesystem;

namespace {

const char *tiny_config = R"({
  "system": {"symbols": 6, "devices": 10, "antennas": 1, "p_active": 0.3,
             "snr_db": 20.0, "seed": 3},
  "data": {"train_samples": 10, "test_samples": 4},
  "train": {"layers": 2, "val_samples": 2, "epochs_per_stage": 3},
  "variants": ["lpomcp_gs"],
  "ista": {"iterations": 3}
})";

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("jadce_capi_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct OwnedString {
    char *s = nullptr;
    ~OwnedString() { jadce_string_free(s); }
};

} // namespace

TEST_CASE("version and status names") {
    REQUIRE(jadce_version() != nullptr);
    CHECK(std::strlen(jadce_version()) > 0);
    CHECK(std::string(jadce_status_name(JADCE_OK)) == "ok");
    CHECK(std::string(jadce_status_name(JADCE_ERR_HASH_MISMATCH)) == "hash_mismatch");
    CHECK(jadce_status_name(static_cast<jadce_status>(99)) != nullptr);
    CHECK(jadce_last_error() != nullptr);
}

TEST_CASE("config normalization fills defaults and reports schema errors") {
    OwnedString out;
    REQUIRE(jadce_config_normalize("{}", &out.s) == JADCE_OK);
    nlohmann::json j = nlohmann::json::parse(out.s);
    CHECK(j["system"]["symbols"] == 100);
    CHECK(j["data"]["train_samples"] == 64);

    char *bad = nullptr;
    CHECK(jadce_config_normalize(R"({"sytem": {}})", &bad) == JADCE_ERR_SCHEMA);
    CHECK(bad == nullptr);
    CHECK(std::strlen(jadce_last_error()) > 0);

    CHECK(jadce_config_normalize(nullptr, &bad) == JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_config_normalize("{}", nullptr) == JADCE_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset lifecycle over the C boundary") {
    TempDir dir;
    jadce_dataset *train = nullptr;
    REQUIRE(jadce_dataset_generate(tiny_config, 0, &train) == JADCE_OK);
    REQUIRE(train != nullptr);

    OwnedString summary;
    REQUIRE(jadce_dataset_summary(train, &summary.s) == JADCE_OK);
    nlohmann::json js = nlohmann::json::parse(summary.s);
    CHECK(js["samples"] == 10);
    CHECK(js["symbols"] == 6);
    CHECK(js["signature"]["kind"] == "gaussian");

    std::string file = (dir.path / "train.json").string();
    REQUIRE(jadce_dataset_save(train, file.c_str()) == JADCE_OK);
    jadce_dataset *loaded = nullptr;
    REQUIRE(jadce_dataset_load(file.c_str(), &loaded) == JADCE_OK);
    OwnedString summary2;
    REQUIRE(jadce_dataset_summary(loaded, &summary2.s) == JADCE_OK);
    CHECK(std::string(summary.s) == summary2.s);

    jadce_dataset *missing = nullptr;
    CHECK(jadce_dataset_load((dir.path / "nope.json").string().c_str(), &missing) ==
          JADCE_ERR_IO);
    CHECK(missing == nullptr);
    CHECK(jadce_dataset_generate("{\"data\": {\"train_samples\": 0}}", 0, &missing) ==
          JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_dataset_generate(tiny_config, 0, nullptr) == JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_dataset_save(nullptr, file.c_str()) == JADCE_ERR_INVALID_ARGUMENT);

    jadce_dataset_free(train);
    jadce_dataset_free(loaded);
    jadce_dataset_free(nullptr); // free tolerates NULL
}

TEST_CASE("training, evaluation, and forward runs over the C boundary") {
    TempDir dir;
    jadce_dataset *train = nullptr, *test = nullptr;
    REQUIRE(jadce_dataset_generate(tiny_config, 0, &train) == JADCE_OK);
    REQUIRE(jadce_dataset_generate(tiny_config, 1, &test) == JADCE_OK);

    jadce_checkpoint *cp = nullptr;
    REQUIRE(jadce_train(tiny_config, "lpomcp_gs", train, nullptr, &cp) == JADCE_OK);
    REQUIRE(cp != nullptr);

    OwnedString info;
    REQUIRE(jadce_checkpoint_info(cp, &info.s) == JADCE_OK);
    nlohmann::json ji = nlohmann::json::parse(info.s);
    CHECK(ji["variant"] == "lpomcp_gs");
    CHECK(ji["layers"] == 2);
    CHECK(ji["completed_stages"] == 4);
    CHECK(ji["aborted"] == false);

    OwnedString losses;
    REQUIRE(jadce_checkpoint_loss_csv(cp, &losses.s) == JADCE_OK);
    std::string csv(losses.s);
    CHECK(csv.rfind("stage,depth,phase,epoch,train_loss\n", 0) == 0);

    // Checkpoint file round trip preserves the info document.
    std::string file = (dir.path / "cp.json").string();
    REQUIRE(jadce_checkpoint_save(cp, file.c_str()) == JADCE_OK);
    jadce_checkpoint *loaded = nullptr;
    REQUIRE(jadce_checkpoint_load(file.c_str(), &loaded) == JADCE_OK);
    OwnedString info2;
    REQUIRE(jadce_checkpoint_info(loaded, &info2.s) == JADCE_OK);
    CHECK(std::string(info.s) == info2.s);

    // Evaluation returns the CSV and the summary; reruns are byte-identical.
    const jadce_checkpoint *cps[] = {cp};
    OwnedString metrics, summary;
    REQUIRE(jadce_evaluate(tiny_config, train, test, cps, 1, &metrics.s, &summary.s) ==
            JADCE_OK);
    CHECK(std::string(metrics.s).rfind("variant,snr_db,", 0) == 0);
    nlohmann::json jsum = nlohmann::json::parse(summary.s);
    CHECK(jsum["methods"].contains("lpomcp_gs"));
    CHECK(jsum["methods"].contains("ista_gs"));
    OwnedString metrics2;
    REQUIRE(jadce_evaluate(tiny_config, train, test, cps, 1, &metrics2.s, nullptr) == JADCE_OK);
    CHECK(std::string(metrics.s) == metrics2.s);

    // Forward pass on one sample: column-major buffer of the lifted estimate.
    double *est = nullptr;
    size_t rows = 0, cols = 0;
    REQUIRE(jadce_forward(cp, test, 0, -1, &est, &rows, &cols) == JADCE_OK);
    CHECK(rows == 20); // 2N lifted rows
    CHECK(cols == 1);  // antenna count
    bool finite = true;
    for (size_t i = 0; i < rows * cols; ++i)
        finite = finite && std::isfinite(est[i]);
    CHECK(finite);
    // Depth 0 returns the zero initializer.
    double *zero = nullptr;
    size_t zr = 0, zc = 0;
    REQUIRE(jadce_forward(cp, test, 0, 0, &zero, &zr, &zc) == JADCE_OK);
    bool all_zero = true;
    for (size_t i = 0; i < zr * zc; ++i)
        all_zero = all_zero && zero[i] == 0.0;
    CHECK(all_zero);
    jadce_buffer_free(est);
    jadce_buffer_free(zero);

    CHECK(jadce_forward(cp, test, 999, -1, &est, &rows, &cols) ==
          JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_forward(cp, test, 0, 7, &est, &rows, &cols) == JADCE_ERR_INVALID_ARGUMENT);

    // A checkpoint trained against a different signature is rejected.
    std::string other_cfg(tiny_config);
    size_t pos = other_cfg.find("\"seed\": 3");
    other_cfg.replace(pos, 9, "\"seed\": 9");
    jadce_dataset *other = nullptr;
    REQUIRE(jadce_dataset_generate(other_cfg.c_str(), 0, &other) == JADCE_OK);
    jadce_checkpoint *stranger = nullptr;
    REQUIRE(jadce_train(other_cfg.c_str(), "lpomcp_gs", other, nullptr, &stranger) == JADCE_OK);
    const jadce_checkpoint *bad_cps[] = {stranger};
    char *m = nullptr;
    CHECK(jadce_evaluate(tiny_config, train, test, bad_cps, 1, &m, nullptr) ==
          JADCE_ERR_HASH_MISMATCH);
    CHECK(m == nullptr);

    CHECK(jadce_train(tiny_config, "amp", train, nullptr, &stranger) ==
          JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_train(tiny_config, "lpomcp_gs", nullptr, nullptr, &stranger) ==
          JADCE_ERR_INVALID_ARGUMENT);

    jadce_checkpoint_free(cp);
    jadce_checkpoint_free(loaded);
    jadce_checkpoint_free(stranger);
    jadce_checkpoint_free(nullptr);
    jadce_dataset_free(train);
    jadce_dataset_free(test);
    jadce_dataset_free(other);
}

TEST_CASE("activity detection over a raw buffer") {
    // Column-major 4x1: rows [3, 0.3, 4, 0] -> device norms {5, 0.3}.
    double x[4] = {3.0, 0.3, 4.0, 0.0};
    uint8_t active[2] = {9, 9};
    REQUIRE(jadce_detect_activity(x, 4, 1, 1.0, active) == JADCE_OK);
    CHECK(active[0] == 1);
    CHECK(active[1] == 0);

    CHECK(jadce_detect_activity(nullptr, 4, 1, 1.0, active) == JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_detect_activity(x, 3, 1, 1.0, active) == JADCE_ERR_DIMENSION_MISMATCH);
    CHECK(jadce_detect_activity(x, 4, 1, -1.0, active) == JADCE_ERR_INVALID_ARGUMENT);
    CHECK(jadce_detect_activity(x, 4, 1, 1.0, nullptr) == JADCE_ERR_INVALID_ARGUMENT);
}
