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

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "jadce/model_gen.hpp"
#include "jadce/rng.hpp"
#include "jadce/training.hpp"
#include "jadce/types.hpp"

using namespace jadce;

namespace {

Dataset gaussian_dataset(int symbols, int devices, int antennas, std::uint64_t seed, int count,
                         double snr_db = 30.0, double p_active = 0.2) {
    SystemConfig cfg;
    cfg.num_symbols = symbols;
    cfg.num_devices = devices;
    cfg.num_antennas = antennas;
    cfg.p_active = p_active;
    cfg.snr_db = snr_db;
    cfg.seed = seed;
    CMat sig = gen_signature(SignatureKind::gaussian, symbols, devices, seed);
    return gen_dataset(sig, SignatureKind::gaussian, 0.0, cfg, stream_domain::train_sample, count);
}

bool params_bit_equal(const NetworkParams &a, const NetworkParams &b) {
    if (a.variant != b.variant || a.layers.size() != b.layers.size())
        return false;
    for (size_t k = 0; k < a.layers.size(); ++k) {
        const LayerParams &x = a.layers[k];
        const LayerParams &y = b.layers[k];
        if (x.threshold != y.threshold || x.nonconvexity != y.nonconvexity ||
            x.step_size != y.step_size)
            return false;
        if (x.input_weight.size() != y.input_weight.size() ||
            (x.input_weight.size() != 0 && !(x.input_weight.array() == y.input_weight.array()).all()))
            return false;
        if (x.full_weight.size() != y.full_weight.size() ||
            (x.full_weight.size() != 0 && !(x.full_weight.array() == y.full_weight.array()).all()))
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("train config validation") {
    TrainConfig ok;
    CHECK_NOTHROW(ok.validate());
    TrainConfig bad = ok;
    bad.layers = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ok;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ok;
    bad.margin = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ok;
    bad.init_nonconvexity_level = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ok;
    bad.reg_weight0 = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ok;
    bad.adam_beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("initialization follows the classical iteration") {
    Dataset ds = gaussian_dataset(8, 14, 2, 40, 4);
    double lambda0 = 0.37;
    for (auto v : {Variant::lpom_gs, Variant::lpomcp_gs, Variant::lista_gs}) {
        NetworkParams p = init_params(v, ds.s_lift, 5, lambda0, 0.1);
        REQUIRE(p.depth() == 5);
        // Thresholds are equal across layers and eta*2*theta starts at 0.1.
        for (const LayerParams &lp : p.layers) {
            CHECK(lp.threshold == p.layers[0].threshold);
            if (variant_uses_nonconvexity(v))
                CHECK(2.0 * lp.threshold * lp.nonconvexity == doctest::Approx(0.1).epsilon(1e-12));
            else
                CHECK(lp.nonconvexity == 0.0);
        }
    }

    // The lpom full weight is exactly I - B*S at initialization.
    NetworkParams lpom = init_params(Variant::lpom_gs, ds.s_lift, 2, lambda0, 0.1);
    Mat expect = Mat::Identity(ds.s_lift.cols(), ds.s_lift.cols()) -
                 lpom.layers[0].input_weight * ds.s_lift;
    CHECK((lpom.layers[0].full_weight - expect).norm() == 0.0);

    // alpom starts its step at the natural unit scale with the frozen weight.
    NetworkParams alpom = init_params(Variant::alpom_gs, ds.s_lift, 3, lambda0, 0.1);
    CHECK(alpom.analytic_weight.size() > 0);
    for (const LayerParams &lp : alpom.layers) {
        CHECK(lp.step_size == 1.0);
        CHECK(lp.input_weight.size() == 0);
    }
    CHECK_THROWS_AS(init_params(Variant::lpomcp_gs, ds.s_lift, 0, lambda0, 0.1), Error);
}

TEST_CASE("constraint projection clamps into the feasible box") {
    Dataset ds = gaussian_dataset(4, 8, 1, 41, 1);
    NetworkParams p = init_params(Variant::lpomcp_gs, ds.s_lift, 2, 0.3, 0.1);

    p.layers[0].threshold = 0.5;
    p.layers[0].nonconvexity = 5.0;
    project_constraints(p, 0.05);
    CHECK(p.layers[0].nonconvexity == doctest::Approx(0.95).epsilon(1e-12));

    p.layers[1].threshold = -0.1;
    project_constraints(p, 0.05);
    CHECK(p.layers[1].threshold == 1e-8);

    // Idempotence on a feasible point.
    NetworkParams q = p;
    project_constraints(q, 0.05);
    CHECK(params_bit_equal(p, q));
    CHECK_NOTHROW(q.validate());

    // The alpom step size is clamped into (0, max].
    NetworkParams a = init_params(Variant::alpom_gs, ds.s_lift, 1, 0.3, 0.1);
    a.layers[0].step_size = -2.0;
    project_constraints(a, 0.05, 10.0);
    CHECK(a.layers[0].step_size == 1e-12);
    a.layers[0].step_size = 50.0;
    project_constraints(a, 0.05, 10.0);
    CHECK(a.layers[0].step_size == 10.0);
}

TEST_CASE("default threshold scale is a tenth of the matched-filter row peak") {
    Dataset ds = gaussian_dataset(6, 10, 2, 42, 3);
    Mat b0 = ds.s_lift.transpose();
    double lambda0 = default_reg_weight0(b0, std::span<const Sample>(ds.samples.data(), 3));
    double acc = 0.0;
    for (const Sample &s : ds.samples) {
        Mat v = b0 * s.y_lift;
        double row_max = 0.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            row_max = std::max(row_max, v.row(i).norm());
        acc += row_max;
    }
    CHECK(lambda0 == doctest::Approx(0.1 * acc / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(default_reg_weight0(b0, std::span<const Sample>()), Error);
}

TEST_CASE("one layer suffices on a trivially identifiable system") {
    // Orthogonal-scaled square signature: S = 2*Q with Q unitary, so the
    // lifted operator satisfies S^T*S = 4*I and the init weight gamma*S^T is
    // its exact inverse.  A single trained layer must then recover the
    // noiseless ground truth almost exactly.
    int n = 8;
    Rng rng(7);
    CMat g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            g(i, j) = rng.cnormal();
    Eigen::HouseholderQR<CMat> qr(g);
    CMat q = qr.householderQ();
    CMat sig = 2.0 * q;

    SystemConfig cfg;
    cfg.num_symbols = n;
    cfg.num_devices = n;
    cfg.num_antennas = 2;
    cfg.p_active = 0.3;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.seed = 15;
    Dataset ds = gen_dataset(sig, SignatureKind::gaussian, 0.0, cfg, stream_domain::train_sample, 12);

    TrainConfig tc;
    tc.layers = 1;
    tc.val_samples = 4;
    tc.epochs_per_stage = 50;
    tc.reg_weight0 = 1e-3;
    Checkpoint cp = train_layerwise(Variant::lpomcp_gs, ds, tc);
    CHECK(cp.completed_stages == 2);
    CHECK_FALSE(cp.aborted);
    CHECK(cp.history.back().val_nmse_db <= -40.0);
}

TEST_CASE("layerwise schedule shape and best-iterate retention") {
    Dataset ds = gaussian_dataset(6, 10, 1, 43, 10, 20.0);
    TrainConfig tc;
    tc.layers = 3;
    tc.val_samples = 2;
    tc.epochs_per_stage = 20;
    Checkpoint cp = train_layerwise(Variant::lpomcp_gs, ds, tc);

    REQUIRE(cp.history.size() == 6); // 2K stages
    for (int stage = 0; stage < 6; ++stage) {
        const StageRecord &rec = cp.history[static_cast<size_t>(stage)];
        CHECK(rec.stage == stage);
        CHECK(rec.depth == stage / 2 + 1);
        CHECK(rec.phase == ((stage % 2) ? "finetune" : "layer"));
        // Loss is recorded before every update plus once at the end.
        CHECK(rec.train_loss.size() == 21);
        // Retention: the stage's best loss is the minimum observed, and it
        // never exceeds the stage's starting loss.
        double lo = *std::min_element(rec.train_loss.begin(), rec.train_loss.end());
        CHECK(rec.best_loss == lo);
        CHECK(rec.best_loss <= rec.train_loss.front());
    }
    CHECK(cp.completed_stages == 6);
    CHECK(cp.signature_hash == ds.signature_hash());

    // The loss table matches the history layout.
    std::string csv = loss_history_csv(cp);
    size_t lines = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 1 + 6 * 21);
}

TEST_CASE("a new layer's stage starts from the trained previous layer") {
    Dataset ds = gaussian_dataset(6, 10, 1, 46, 10, 20.0);
    TrainConfig shallow;
    shallow.layers = 1;
    shallow.val_samples = 2;
    shallow.epochs_per_stage = 20;
    Checkpoint one = train_layerwise(Variant::lpomcp_gs, ds, shallow);

    TrainConfig deep = shallow;
    deep.layers = 2;
    Checkpoint two = train_layerwise(Variant::lpomcp_gs, ds, deep);

    // The first two stages touch only layer 1, so both runs reach stage 2
    // with the same trained first layer; the new layer then begins as a copy
    // of it.  The recorded starting loss must therefore equal the depth-2
    // loss of exactly that duplicated network.
    NetworkParams dup = one.params;
    dup.layers.push_back(dup.layers.front());
    double expect = 0.0;
    int train_count = static_cast<int>(ds.samples.size()) - deep.val_samples;
    for (int i = 0; i < train_count; ++i) {
        const Sample &s = ds.samples[static_cast<size_t>(i)];
        expect +=
            (forward(dup, ds.s_lift, s.y_lift, 2).estimates.back() - s.x_lift).squaredNorm();
    }
    REQUIRE(two.history.size() == 4);
    CHECK(two.history[2].train_loss.front() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("validation improves monotonically layer over layer for the scalar variant") {
    Dataset ds = gaussian_dataset(20, 40, 2, 44, 32, 30.0, 0.1);
    TrainConfig tc;
    tc.layers = 4;
    tc.val_samples = 8;
    tc.epochs_per_stage = 100;
    Checkpoint cp = train_layerwise(Variant::alpom_gs, ds, tc);

    std::vector<double> val;
    for (const StageRecord &rec : cp.history)
        if (rec.phase == "finetune")
            val.push_back(rec.val_nmse_db);
    REQUIRE(val.size() == 4);
    for (size_t k = 1; k < val.size(); ++k)
        CHECK(val[k] <= val[k - 1] + 0.1);
}

TEST_CASE("training is bit-reproducible") {
    Dataset ds = gaussian_dataset(6, 10, 1, 45, 8, 20.0);
    TrainConfig tc;
    tc.layers = 2;
    tc.val_samples = 2;
    tc.epochs_per_stage = 15;
    Checkpoint a = train_layerwise(Variant::lpomcp_gs, ds, tc);
    Checkpoint b = train_layerwise(Variant::lpomcp_gs, ds, tc);
    CHECK(params_bit_equal(a.params, b.params));
    REQUIRE(a.history.size() == b.history.size());
    for (size_t s = 0; s < a.history.size(); ++s) {
        CHECK(a.history[s].train_loss == b.history[s].train_loss);
        CHECK(a.history[s].best_loss == b.history[s].best_loss);
        CHECK(a.history[s].val_nmse_db == b.history[s].val_nmse_db);
    }
    CHECK(loss_history_csv(a) == loss_history_csv(b));

    // Mini-batch mode is deterministic as well.
    TrainConfig mb = tc;
    mb.batch_size = 3;
    Checkpoint c = train_layerwise(Variant::lista_gs, ds, mb);
    Checkpoint d = train_layerwise(Variant::lista_gs, ds, mb);
    CHECK(params_bit_equal(c.params, d.params));
    CHECK_FALSE(params_bit_equal(a.params, c.params)); // different variant families
}

TEST_CASE("non-finite loss aborts with a diagnostic checkpoint and resumes") {
    Dataset ds = gaussian_dataset(6, 10, 1, 46, 8, 20.0);
    TrainConfig bad;
    bad.layers = 2;
    bad.val_samples = 2;
    bad.epochs_per_stage = 25;
    // Large enough that the first normalized update pushes the squared loss
    // past the double range: the non-finite guard must fire, not wrap.
    bad.learning_rate = 1e155;

    Checkpoint diagnostic;
    bool aborted = false;
    try {
        train_layerwise(Variant::lpomcp_gs, ds, bad);
    } catch (const TrainAbortError &e) {
        aborted = true;
        diagnostic = e.checkpoint();
    }
    REQUIRE(aborted);
    CHECK(diagnostic.aborted);
    CHECK_FALSE(diagnostic.abort_reason.empty());
    CHECK(diagnostic.completed_stages < 4);
    // The diagnostic parameters are the best finite iterate, still valid.
    CHECK_NOTHROW(diagnostic.params.validate());

    // Resuming with a sane learning rate completes the schedule.
    TrainConfig good = bad;
    good.learning_rate = 5e-4;
    Checkpoint resumed = train_layerwise(Variant::lpomcp_gs, ds, good, &diagnostic);
    CHECK(resumed.completed_stages == 4);
    CHECK_FALSE(resumed.aborted);
    CHECK(resumed.history.size() == 4);

    // Resume validation: wrong variant and wrong dataset are rejected.
    CHECK_THROWS_AS(train_layerwise(Variant::lista_gs, ds, good, &diagnostic), Error);
    Dataset other = gaussian_dataset(6, 10, 1, 999, 8, 20.0);
    try {
        train_layerwise(Variant::lpomcp_gs, other, good, &diagnostic);
        CHECK(false);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::hash_mismatch);
    }
}

TEST_CASE("a completed checkpoint resumes into itself") {
    Dataset ds = gaussian_dataset(6, 10, 1, 47, 8, 20.0);
    TrainConfig tc;
    tc.layers = 1;
    tc.val_samples = 2;
    tc.epochs_per_stage = 10;
    Checkpoint done = train_layerwise(Variant::lpomcp_gs, ds, tc);
    Checkpoint again = train_layerwise(Variant::lpomcp_gs, ds, tc, &done);
    CHECK(params_bit_equal(done.params, again.params));
    CHECK(again.completed_stages == done.completed_stages);
}
