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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "jadce/containers.hpp"
#include "jadce/io.hpp"
#include "jadce/model_gen.hpp"
#include "jadce/rng.hpp"
#include "jadce/training.hpp"
#include "jadce/types.hpp"

using namespace jadce;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("jadce_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

bool mats_bit_equal(const Mat &a, const Mat &b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.size() == 0 ||
            std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0);
}

Dataset small_dataset(std::uint64_t seed, int count) {
    SystemConfig cfg;
    cfg.num_symbols = 6;
    cfg.num_devices = 10;
    cfg.num_antennas = 2;
    cfg.p_active = 0.3;
    cfg.snr_db = 20.0;
    cfg.seed = seed;
    CMat sig = gen_signature(SignatureKind::gaussian, 6, 10, seed);
    return gen_dataset(sig, SignatureKind::gaussian, 0.0, cfg, stream_domain::train_sample, count);
}

} // namespace

TEST_CASE("base64 round trips arbitrary byte strings") {
    CHECK(base64_encode(nullptr, 0) == "");
    CHECK(base64_decode("").empty());

    const std::uint8_t abc[] = {'a', 'b', 'c'};
    CHECK(base64_encode(abc, 3) == "YWJj");
    const std::uint8_t ab[] = {'a', 'b'};
    CHECK(base64_encode(ab, 2) == "YWI=");
    const std::uint8_t a1[] = {'a'};
    CHECK(base64_encode(a1, 1) == "YQ==");

    Rng rng(3);
    for (size_t len : {1u, 2u, 3u, 17u, 64u, 255u}) {
        std::vector<std::uint8_t> buf(len);
        for (auto &b : buf)
            b = static_cast<std::uint8_t>(rng.uniform() * 256.0);
        auto round = base64_decode(base64_encode(buf.data(), buf.size()));
        CHECK(round == buf);
    }

    CHECK_THROWS_AS(base64_decode("YQ"), Error);    // bad length
    CHECK_THROWS_AS(base64_decode("Y!=="), Error);  // bad alphabet
    CHECK_THROWS_AS(base64_decode("=AAA"), Error);  // misplaced padding
}

TEST_CASE("shortest round-trip decimal rendering") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
    // The value must survive a parse round trip exactly.
    for (double v : {1.0 / 3.0, 1e-300, -7.25e17, 0.30000000000000004,
                     std::numeric_limits<double>::min()}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("matrix payload survives non-finite values bit for bit") {
    Mat m(2, 3);
    m << 1.0, -0.0, std::numeric_limits<double>::infinity(), 1e-320,
        std::numeric_limits<double>::quiet_NaN(), 0.30000000000000004;
    Mat round = decode_matrix_payload(encode_matrix_payload(m), 2, 3);
    CHECK(mats_bit_equal(m, round)); // memcmp also matches NaN payloads
    CHECK_THROWS_AS(decode_matrix_payload(encode_matrix_payload(m), 3, 3), Error);
}

TEST_CASE("matrix hashing discriminates content and layout") {
    Mat a(2, 2);
    a << 1.0, 2.0, 3.0, 4.0;
    Mat b = a;
    CHECK(hash_matrix(a) == hash_matrix(b));
    b(1, 1) = 4.0000000001;
    CHECK(hash_matrix(a) != hash_matrix(b));
    CHECK(hash_matrix(Mat(a.transpose())) != hash_matrix(a));

    CMat c(1, 2);
    c << std::complex<double>(1.0, 2.0), std::complex<double>(3.0, 4.0);
    CMat d = c;
    CHECK(hash_matrix(c) == hash_matrix(d));
    d(0, 1) = std::complex<double>(3.0, 4.5);
    CHECK(hash_matrix(c) != hash_matrix(d));

    // The fingerprint string form round-trips.
    std::uint64_t h = hash_matrix(a);
    CHECK(hash_from_string(hash_to_string(h)) == h);
    CHECK(hash_to_string(h).substr(0, 2) == "0x");
    CHECK(hash_to_string(h).size() == 18);
    CHECK_THROWS_AS(hash_from_string("12ab"), Error);
    CHECK_THROWS_AS(hash_from_string("0x12xy"), Error);
}

TEST_CASE("dataset container round trips bit for bit") {
    TempDir dir;
    Dataset ds = small_dataset(21, 5);
    fs::path file = dir.path / "data.json";
    save_dataset(ds, stream_domain::train_sample, file);

    LoadedDataset loaded = load_dataset(file);
    CHECK(loaded.split_domain == stream_domain::train_sample);
    const Dataset &r = loaded.dataset;
    CHECK(r.kind == ds.kind);
    CHECK(r.kappa == ds.kappa);
    CHECK(r.config.num_symbols == ds.config.num_symbols);
    CHECK(r.config.snr_db == ds.config.snr_db);
    CHECK(r.config.seed == ds.config.seed);
    CHECK(r.signature_hash() == ds.signature_hash());
    CHECK(mats_bit_equal(r.s_lift, ds.s_lift));
    REQUIRE(r.samples.size() == ds.samples.size());
    for (size_t i = 0; i < r.samples.size(); ++i) {
        CHECK(r.samples[i].activity == ds.samples[i].activity);
        CHECK(r.samples[i].sigma2 == ds.samples[i].sigma2);
        CHECK(mats_bit_equal(r.samples[i].x_lift, ds.samples[i].x_lift));
        CHECK(mats_bit_equal(r.samples[i].y_lift, ds.samples[i].y_lift));
        CHECK(r.samples[i].channel == ds.samples[i].channel);
    }
}

TEST_CASE("checkpoint container round trips every variant bit for bit") {
    TempDir dir;
    Dataset ds = small_dataset(22, 10);
    for (auto v : {Variant::lpom_gs, Variant::lpomcp_gs, Variant::alpom_gs, Variant::lista_gs}) {
        TrainConfig tc;
        tc.layers = 2;
        tc.val_samples = 2;
        tc.epochs_per_stage = 3;
        Checkpoint cp = train_layerwise(v, ds, tc);

        fs::path file = dir.path / (to_string(v) + std::string(".json"));
        save_checkpoint(cp, file);
        Checkpoint r = load_checkpoint(file);

        CHECK(r.schema_version == cp.schema_version);
        CHECK(r.params.variant == v);
        CHECK(r.signature_hash == cp.signature_hash);
        CHECK(r.completed_stages == cp.completed_stages);
        CHECK(r.aborted == cp.aborted);
        REQUIRE(r.params.layers.size() == cp.params.layers.size());
        for (size_t k = 0; k < r.params.layers.size(); ++k) {
            CHECK(r.params.layers[k].threshold == cp.params.layers[k].threshold);
            CHECK(r.params.layers[k].nonconvexity == cp.params.layers[k].nonconvexity);
            CHECK(r.params.layers[k].step_size == cp.params.layers[k].step_size);
            CHECK(mats_bit_equal(r.params.layers[k].input_weight, cp.params.layers[k].input_weight));
            CHECK(mats_bit_equal(r.params.layers[k].full_weight, cp.params.layers[k].full_weight));
        }
        CHECK(mats_bit_equal(r.params.analytic_weight, cp.params.analytic_weight));
        REQUIRE(r.history.size() == cp.history.size());
        for (size_t s = 0; s < r.history.size(); ++s) {
            CHECK(r.history[s].stage == cp.history[s].stage);
            CHECK(r.history[s].depth == cp.history[s].depth);
            CHECK(r.history[s].phase == cp.history[s].phase);
            CHECK(r.history[s].train_loss == cp.history[s].train_loss);
            CHECK(r.history[s].best_loss == cp.history[s].best_loss);
            CHECK(r.history[s].val_nmse_db == cp.history[s].val_nmse_db);
        }
        // Train config fields survive for reproducible resumes.
        CHECK(r.config.layers == tc.layers);
        CHECK(r.config.epochs_per_stage == tc.epochs_per_stage);
        CHECK(r.config.learning_rate == tc.learning_rate);
        CHECK(r.config.adam_eps == tc.adam_eps);
        CHECK(r.config.seed == tc.seed);
    }
}

TEST_CASE("containers reject tampering and truncation") {
    TempDir dir;
    Dataset ds = small_dataset(23, 3);
    fs::path file = dir.path / "data.json";
    save_dataset(ds, stream_domain::train_sample, file);

    // Flip the recorded signature fingerprint.
    nlohmann::json doc = nlohmann::json::parse(read_file(file));
    std::string h = doc["signature"]["hash"];
    h[5] = (h[5] == 'a') ? 'b' : 'a';
    doc["signature"]["hash"] = h;
    fs::path bad = dir.path / "tampered.json";
    atomic_write_file(bad, doc.dump());
    try {
        load_dataset(bad);
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::hash_mismatch);
    }

    // Truncated file: schema failure, not a crash.
    std::string text = read_file(file);
    fs::path cut = dir.path / "truncated.json";
    atomic_write_file(cut, text.substr(0, text.size() / 2));
    try {
        load_dataset(cut);
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::schema);
    }

    // Wrong schema tag.
    nlohmann::json wrong = nlohmann::json::parse(read_file(file));
    wrong["schema"] = "jadce.other.v1";
    fs::path other = dir.path / "other.json";
    atomic_write_file(other, wrong.dump());
    try {
        load_dataset(other);
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::schema);
    }

    // Missing file: io failure with the path in the message.
    try {
        load_dataset(dir.path / "nope.json");
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::io);
    }

    // A checkpoint is not a dataset.
    TrainConfig tc;
    tc.layers = 1;
    tc.val_samples = 1;
    tc.epochs_per_stage = 2;
    Checkpoint cp = train_layerwise(Variant::alpom_gs, ds, tc);
    fs::path cpfile = dir.path / "cp.json";
    save_checkpoint(cp, cpfile);
    try {
        load_dataset(cpfile);
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::schema);
    }
    try {
        load_checkpoint(file);
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::schema);
    }
}

TEST_CASE("atomic write leaves no partial files behind") {
    TempDir dir;
    fs::path file = dir.path / "out.txt";
    atomic_write_file(file, "first");
    atomic_write_file(file, "second");
    CHECK(read_file(file) == "second");
    // No stray temporaries remain next to the target.
    int entries = 0;
    for (auto const &e : fs::directory_iterator(dir.path)) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
    CHECK_THROWS_AS(read_file(dir.path / "missing.txt"), Error);
}
