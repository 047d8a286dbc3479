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

#include <cmath>

#include <Eigen/Eigenvalues>

#include "jadce/model_gen.hpp"
#include "jadce/rng.hpp"
#include "jadce/solvers.hpp"
#include "jadce/types.hpp"

using namespace jadce;

namespace {
Mat random_lift(int symbols, int devices, std::uint64_t seed) {
    return lift_operator(gen_signature(SignatureKind::gaussian, symbols, devices, seed));
}
} // namespace

TEST_CASE("spectral norm of simple operators") {
    CHECK(spectral_norm_sq(Mat::Identity(6, 6)) == doctest::Approx(1.0).epsilon(1e-8));
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    CHECK(spectral_norm_sq(d) == doctest::Approx(9.0).epsilon(1e-8));
    CHECK_THROWS_AS(spectral_norm_sq(Mat::Zero(3, 3)), Error);
}

TEST_CASE("spectral norm matches a dense eigensolver") {
    Mat a = random_lift(10, 20, 23); // 20 x 40
    double power = spectral_norm_sq(a);
    Eigen::SelfAdjointEigenSolver<Mat> eig(Mat(a.transpose() * a));
    double dense = eig.eigenvalues().maxCoeff();
    CHECK(std::abs(power - dense) / dense < 1e-6);
}

TEST_CASE("spectral norm never underestimates the Rayleigh quotient") {
    Mat a = random_lift(8, 17, 91); // deliberately non-square lift
    double d = spectral_norm_sq(a);
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        Mat v(a.cols(), 1);
        for (Eigen::Index r = 0; r < v.rows(); ++r)
            v(r, 0) = rng.normal();
        double quotient = (a * v).squaredNorm() / v.squaredNorm();
        CHECK(d >= quotient);
    }
}

TEST_CASE("ista config validation") {
    IstaConfig bad;
    bad.reg_weight = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = IstaConfig{};
    bad.max_iters = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = IstaConfig{};
    bad.trajectory_stride = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = IstaConfig{};
    bad.step = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("ista fixed point at the origin for zero measurements") {
    Mat s = random_lift(6, 12, 3);
    Mat y = Mat::Zero(12, 2);
    IstaConfig cfg;
    cfg.max_iters = 20;
    IstaResult res = ista_gs(s, y, cfg);
    for (const Mat &x : res.estimates)
        CHECK(x.norm() == 0.0);
    CHECK(res.objective.back() == 0.0);
}

TEST_CASE("unregularized identity system converges geometrically") {
    Mat s = Mat::Identity(8, 8);
    Rng rng(5);
    Mat y(8, 2);
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            y(i, j) = rng.normal();
    IstaConfig cfg;
    cfg.reg_weight = 0.0;
    cfg.max_iters = 200;
    IstaResult res = ista_gs(s, y, cfg);
    // step = 1/D = 1 on the identity, so one iteration already lands on y.
    CHECK(res.step == doctest::Approx(1.0).epsilon(1e-8));
    CHECK((res.estimates.back() - y).norm() <= 1e-9 * y.norm());
    // Objective decreases to zero.
    CHECK(res.objective.front() == doctest::Approx(0.5 * y.squaredNorm()).epsilon(1e-12));
    CHECK(res.objective.back() <= 1e-16 * y.squaredNorm());
}

TEST_CASE("ista objective is non-increasing and self-consistent") {
    SystemConfig cfg;
    cfg.num_symbols = 30;
    cfg.num_devices = 60;
    cfg.num_antennas = 2;
    cfg.p_active = 0.1;
    cfg.snr_db = 20.0;
    cfg.seed = 77;
    CMat sig = gen_signature(SignatureKind::gaussian, cfg.num_symbols, cfg.num_devices, cfg.seed);
    Mat s_lift = lift_operator(sig);
    Sample sample = gen_sample(sig, cfg, stream_domain::probe, 0);

    IstaConfig ista;
    ista.reg_weight = 0.5;
    ista.max_iters = 500;
    ista.trajectory_stride = 500; // keep only the initial and final iterates
    IstaResult res = ista_gs(s_lift, sample.y_lift, ista);
    for (size_t i = 1; i < res.objective.size(); ++i) {
        double slack = 1e-12 * std::max(1.0, std::abs(res.objective[i - 1]));
        CHECK(res.objective[i] <= res.objective[i - 1] + slack);
    }

    IstaConfig longer = ista;
    longer.max_iters = 2000;
    longer.trajectory_stride = 2000;
    IstaResult ref = ista_gs(s_lift, sample.y_lift, longer);
    CHECK(std::abs(res.objective.back() - ref.objective.back()) <=
          1e-6 * std::abs(ref.objective.back()));
}

TEST_CASE("trajectory stride keeps the initial and final iterates") {
    Mat s = random_lift(6, 12, 31);
    Rng rng(9);
    Mat y(12, 1);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        y(i, 0) = rng.normal();
    IstaConfig cfg;
    cfg.max_iters = 10;
    cfg.trajectory_stride = 3;
    IstaResult res = ista_gs(s, y, cfg);
    CHECK(res.iterations == 10);
    // Initial point, iterates 3, 6, 9, and the forced final iterate 10.
    CHECK(res.estimates.size() == 5);
    CHECK(res.objective.size() == 11);
    IstaConfig dense_cfg = cfg;
    dense_cfg.trajectory_stride = 1;
    IstaResult dense = ista_gs(s, y, dense_cfg);
    CHECK(dense.estimates.size() == 11);
    CHECK((dense.estimates[3] - res.estimates[1]).norm() == 0.0);
    CHECK((dense.estimates[10] - res.estimates[4]).norm() == 0.0);
}

TEST_CASE("early stopping halts once updates stall") {
    Mat s = Mat::Identity(4, 4);
    Mat y = Mat::Ones(4, 1);
    IstaConfig cfg;
    cfg.reg_weight = 0.0;
    cfg.max_iters = 500;
    cfg.rel_tol = 1e-12;
    IstaResult res = ista_gs(s, y, cfg);
    CHECK(res.iterations < 500); // identity system converges immediately
}

TEST_CASE("closed-form weights on canonical systems") {
    CHECK((analytic_weight_closed_form(Mat::Identity(5, 5)) - Mat::Identity(5, 5)).norm() <=
          1e-12);
    Mat twice = 2.0 * Mat::Identity(4, 4);
    CHECK((analytic_weight_closed_form(twice) - 0.5 * Mat::Identity(4, 4)).norm() <= 1e-12);
    // Rank-deficient system has no feasible unit-diagonal response.
    Mat flat = Mat::Zero(2, 4);
    flat(0, 0) = 1.0;
    CHECK_THROWS_AS(analytic_weight_closed_form(flat), Error);
}

TEST_CASE("pgd matches the closed form and stays feasible") {
    Mat s = random_lift(10, 20, 13); // 20 x 40
    Mat closed = analytic_weight_closed_form(s);
    Mat pgd = analytic_weight_pgd(s);

    CoherenceReport closed_rep = coherence_report(closed, s);
    CoherenceReport pgd_rep = coherence_report(pgd, s);
    CHECK(closed_rep.diag_max_dev <= 1e-12);
    CHECK(pgd_rep.diag_max_dev <= 1e-10);

    CHECK((pgd - closed).norm() / closed.norm() <= 1e-4);
    double obj_closed = (closed * s).squaredNorm();
    double obj_pgd = (pgd * s).squaredNorm();
    CHECK(std::abs(obj_pgd - obj_closed) / obj_closed <= 1e-5);
    // The closed form is the optimum: PGD can approach but not beat it.
    CHECK(obj_closed <= obj_pgd + 1e-8);
}

TEST_CASE("coherence report on an exactly invertible system") {
    Mat s = random_lift(4, 4, 19); // square 8 x 8 lift
    Mat inv = s.inverse();
    CoherenceReport rep = coherence_report(inv, s);
    CHECK(rep.phi_hat <= 1e-10);
    CHECK(rep.diag_max_dev <= 1e-10);
    CHECK(rep.mu_b > 0.0);

    // mu_b is the sum of row norms.
    Mat b(2, 2);
    b << 3.0, 4.0, 0.0, 2.0;
    CoherenceReport hand = coherence_report(b, Mat::Identity(2, 2));
    CHECK(hand.mu_b == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(hand.phi_hat == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(hand.diag_max_dev == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("analytic weights exist for gaussian lifts and report coherence") {
    Mat s = random_lift(50, 100, 41);
    Mat b = analytic_weight_closed_form(s);
    CoherenceReport rep = coherence_report(b, s);
    CHECK(rep.diag_max_dev <= 1e-12);
    CHECK(rep.phi_hat > 0.0);
    CHECK(rep.phi_hat < 1.0); // far from degenerate at this aspect ratio
}
