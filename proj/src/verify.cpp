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

#include "jadce/verify.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "jadce/eval.hpp"
#include "jadce/model_gen.hpp"
#include "jadce/nets.hpp"
#include "jadce/rng.hpp"
#include "jadce/solvers.hpp"
#include "jadce/training.hpp"

namespace jadce {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

// --- activation vs brute-force scalar argmin -------------------------------

CheckResult check_prox_oracle(const VerifyOptions &opts) {
    CheckResult r;
    r.name = "prox_matches_grid_oracle";
    auto prox = opts.prox_fn ? opts.prox_fn : [](double u, const McpParams &p) {
        return mcp_prox_scalar(u, p);
    };
    Rng rng(stream_seed(0xC0FFEE, stream_domain::probe, 0));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double u = 6.0 * (rng.uniform() - 0.5);
        McpParams p;
        p.threshold = 0.01 + 1.99 * rng.uniform();
        p.nonconvexity = rng.uniform() * 0.9 / (2.0 * p.threshold);
        double step = 1e-4 * std::max(1.0, std::abs(u));
        double halfwidth = std::abs(u) + 1.0;
        double got = prox(u, p);
        double want = prox_oracle(u, p, halfwidth, step);
        double dev = std::abs(got - want);
        worst = std::max(worst, dev / step);
        if (dev > 2.0 * step) {
            r.detail = "deviation " + fmt(dev) + " > 2 grid steps at u=" + fmt(u) +
                       " threshold=" + fmt(p.threshold) + " nonconvexity=" + fmt(p.nonconvexity);
            return r;
        }
    }
    r.passed = true;
    r.detail = "1000 draws, worst deviation " + fmt(worst) + " grid steps (tol 2)";
    return r;
}

// --- backprop vs central finite differences --------------------------------

// Pointers to every trainable scalar of `p`, in a fixed traversal order that
// matches grads_in_order below.  kind: 'm' matrix entry, 't' threshold,
// 'e' nonconvexity, 's' step size.
std::vector<std::pair<double *, char>> leaves_in_order(NetworkParams &p) {
    std::vector<std::pair<double *, char>> out;
    for (LayerParams &lp : p.layers) {
        if (variant_uses_full_weight(p.variant))
            for (Eigen::Index j = 0; j < lp.full_weight.size(); ++j)
                out.emplace_back(lp.full_weight.data() + j, 'm');
        if (variant_uses_input_weight(p.variant))
            for (Eigen::Index j = 0; j < lp.input_weight.size(); ++j)
                out.emplace_back(lp.input_weight.data() + j, 'm');
        if (variant_uses_step_size(p.variant))
            out.emplace_back(&lp.step_size, 's');
        out.emplace_back(&lp.threshold, 't');
        if (variant_uses_nonconvexity(p.variant))
            out.emplace_back(&lp.nonconvexity, 'e');
    }
    return out;
}

std::vector<double> grads_in_order(const NetworkParams &p, const Gradients &g) {
    std::vector<double> out;
    for (size_t k = 0; k < g.layers.size(); ++k) {
        const LayerGrads &lg = g.layers[k];
        if (variant_uses_full_weight(p.variant))
            out.insert(out.end(), lg.full_weight.data(),
                       lg.full_weight.data() + lg.full_weight.size());
        if (variant_uses_input_weight(p.variant))
            out.insert(out.end(), lg.input_weight.data(),
                       lg.input_weight.data() + lg.input_weight.size());
        if (variant_uses_step_size(p.variant))
            out.push_back(lg.step_size);
        out.push_back(lg.threshold);
        if (variant_uses_nonconvexity(p.variant))
            out.push_back(lg.nonconvexity);
    }
    return out;
}

// An instance is usable for differencing only when every activation input
// sits well clear of a branch boundary, so that no finite-difference probe
// crosses a kink.
bool clear_of_kinks(const NetworkParams &params, const Mat &s_lift,
                    std::span<const Sample> batch, double gap) {
    for (const Sample &s : batch) {
        Trajectory traj = forward(params, s_lift, s.y_lift);
        for (int k = 0; k < params.depth(); ++k) {
            const Mat &pre = traj.preactivations[static_cast<size_t>(k)];
            const LayerParams &lp = params.layers[static_cast<size_t>(k)];
            if (params.variant == Variant::lista_gs) {
                for (Eigen::Index i = 0; i < pre.rows(); ++i) {
                    double n = pre.row(i).norm();
                    if (n < gap || std::abs(n - lp.threshold) < gap)
                        return false;
                }
                continue;
            }
            double radius = lp.nonconvexity > 0.0 ? 1.0 / (2.0 * lp.nonconvexity)
                                                  : std::numeric_limits<double>::infinity();
            // The nonconvexity probe moves the saturation radius itself.
            double h_eta = 1e-5 * std::max(1.0, lp.nonconvexity);
            double radius_shift =
                lp.nonconvexity > 0.0
                    ? (h_eta + 1e-9) / (2.0 * lp.nonconvexity * lp.nonconvexity)
                    : 0.0;
            for (Eigen::Index j = 0; j < pre.size(); ++j) {
                double au = std::abs(pre.data()[j]);
                if (std::abs(au - lp.threshold) < gap)
                    return false;
                if (std::isfinite(radius) && std::abs(au - radius) < gap + radius_shift)
                    return false;
            }
        }
    }
    return true;
}

CheckResult check_gradients() {
    CheckResult r;
    r.name = "gradients_match_finite_diff";
    constexpr int want_instances = 20;
    constexpr double gap = 1e-3;
    constexpr double tol = 1e-4;
    SystemConfig sys;
    sys.num_symbols = 4;
    sys.num_devices = 6;
    sys.num_antennas = 1;
    sys.p_active = 0.3;
    sys.snr_db = 20.0;

    double worst = 0.0;
    for (Variant variant :
         {Variant::lpom_gs, Variant::lpomcp_gs, Variant::alpom_gs, Variant::lista_gs}) {
        int accepted = 0;
        for (std::uint64_t attempt = 0; attempt < 400 && accepted < want_instances; ++attempt) {
            sys.seed = 0xD1CE00 + attempt;
            CMat sig = gen_signature(SignatureKind::gaussian, sys.num_symbols, sys.num_devices,
                                     sys.seed);
            Mat s_lift = lift_operator(sig);
            std::vector<Sample> batch;
            batch.push_back(gen_sample(sig, sys, stream_domain::probe, 0));
            batch.push_back(gen_sample(sig, sys, stream_domain::probe, 1));

            NetworkParams params = init_params(variant, s_lift, 2, 0.3);
            Rng rng(stream_seed(sys.seed, stream_domain::probe, 99));
            for (LayerParams &lp : params.layers) {
                if (variant_uses_full_weight(variant))
                    for (Eigen::Index j = 0; j < lp.full_weight.size(); ++j)
                        lp.full_weight.data()[j] += 0.05 * rng.normal();
                if (variant_uses_input_weight(variant))
                    for (Eigen::Index j = 0; j < lp.input_weight.size(); ++j)
                        lp.input_weight.data()[j] += 0.05 * rng.normal();
                if (variant_uses_step_size(variant))
                    lp.step_size *= 1.0 + 0.2 * (rng.uniform() - 0.5);
                lp.threshold = std::max(5e-3, lp.threshold * (1.0 + 0.5 * (rng.uniform() - 0.5)));
                if (variant_uses_nonconvexity(variant))
                    lp.nonconvexity = 0.8 * rng.uniform() / (2.0 * lp.threshold);
            }
            project_constraints(params);
            if (!clear_of_kinks(params, s_lift, batch, gap))
                continue;
            ++accepted;

            Gradients g = grad_loss(params, s_lift, batch);
            std::vector<double> analytic = grads_in_order(params, g);

            NetworkParams work = params;
            auto leaves = leaves_in_order(work);
            if (leaves.size() != analytic.size()) {
                r.detail = "leaf enumeration mismatch";
                return r;
            }
            for (size_t i = 0; i < leaves.size(); ++i) {
                double *leaf = leaves[i].first;
                double v = *leaf;
                double h = 1e-5 * std::max(1.0, std::abs(v));
                *leaf = v + h;
                double up = grad_loss(work, s_lift, batch).loss;
                *leaf = v - h;
                double down = grad_loss(work, s_lift, batch).loss;
                *leaf = v;
                double fd = (up - down) / (2.0 * h);
                double denom = std::max({1e-2, std::abs(fd), std::abs(analytic[i])});
                double rel = std::abs(fd - analytic[i]) / denom;
                worst = std::max(worst, rel);
                if (rel > tol) {
                    r.detail = to_string(variant) + " leaf " + std::to_string(i) + " (" +
                               leaves[i].second + std::string("): analytic ") +
                               fmt(analytic[i]) + " vs fd " + fmt(fd) + ", rel " + fmt(rel);
                    return r;
                }
            }
        }
        if (accepted < want_instances) {
            r.detail = std::string("could not place 20 instances of ") + to_string(variant) +
                       " clear of activation kinks";
            return r;
        }
    }
    r.passed = true;
    r.detail = "4 variants x 20 instances, worst relative error " + fmt(worst) + " (tol 1e-4)";
    return r;
}

// --- constrained weight solver vs direct solution --------------------------

CheckResult check_analytic_weights() {
    CheckResult r;
    r.name = "pgd_matches_closed_form";
    double worst_fro = 0.0, worst_obj = 0.0, worst_diag = 0.0;
    for (std::uint64_t i = 0; i < 10; ++i) {
        CMat sig = gen_signature(SignatureKind::gaussian, 20, 40, 0xAB1E00 + i);
        Mat s_lift = lift_operator(sig);
        Mat direct = analytic_weight_closed_form(s_lift);
        Mat pgd = analytic_weight_pgd(s_lift);

        double fro = (pgd - direct).norm() / direct.norm();
        double obj_direct = (direct * s_lift).squaredNorm();
        double obj_pgd = (pgd * s_lift).squaredNorm();
        double obj = std::abs(obj_pgd - obj_direct) / obj_direct;
        double diag = std::max(coherence_report(direct, s_lift).diag_max_dev,
                               coherence_report(pgd, s_lift).diag_max_dev);
        worst_fro = std::max(worst_fro, fro);
        worst_obj = std::max(worst_obj, obj);
        worst_diag = std::max(worst_diag, diag);
    }
    r.passed = worst_fro <= 1e-4 && worst_obj <= 1e-5 && worst_diag <= 1e-10;
    r.detail = "10 instances, rel Frobenius " + fmt(worst_fro) + " (tol 1e-4), rel objective " +
               fmt(worst_obj) + " (tol 1e-5), unit-response deviation " + fmt(worst_diag) +
               " (tol 1e-10)";
    return r;
}

// --- descent property of the classical baseline -----------------------------

CheckResult check_ista_monotone() {
    CheckResult r;
    r.name = "ista_objective_monotone";
    double worst = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < 10; ++i) {
        SystemConfig sys;
        sys.num_symbols = 40;
        sys.num_devices = 80;
        sys.num_antennas = 2;
        sys.p_active = 0.1;
        sys.snr_db = 20.0;
        sys.seed = 0x15A000 + i;
        CMat sig = gen_signature(SignatureKind::gaussian, sys.num_symbols, sys.num_devices,
                                 sys.seed);
        Sample sample = gen_sample(sig, sys, stream_domain::probe, i);
        Mat s_lift = lift_operator(sig);

        Mat match = s_lift.transpose() * sample.y_lift;
        double row_max = 0.0;
        for (Eigen::Index n = 0; n < match.rows(); ++n)
            row_max = std::max(row_max, match.row(n).norm());

        IstaConfig cfg;
        cfg.reg_weight = 0.1 * row_max;
        cfg.max_iters = 500;
        cfg.trajectory_stride = 500; // objective is recorded every iteration regardless
        IstaResult res = ista_gs(s_lift, sample.y_lift, cfg);
        for (size_t k = 1; k < res.objective.size(); ++k) {
            double slack = 1e-12 * std::max(1.0, std::abs(res.objective[k - 1]));
            double rise = res.objective[k] - res.objective[k - 1];
            worst = std::max(worst, rise / std::max(1.0, std::abs(res.objective[k - 1])));
            if (rise > slack) {
                r.detail = "objective rose by " + fmt(rise) + " at iteration " +
                           std::to_string(k) + " of instance " + std::to_string(i);
                return r;
            }
        }
    }
    r.passed = true;
    r.detail = "10 instances x 500 iterations, worst relative rise " + fmt(worst) +
               " (slack 1e-12)";
    return r;
}

// --- network at init reproduces the classical iteration --------------------

CheckResult check_init_equivalence() {
    CheckResult r;
    r.name = "unfolded_init_matches_ista";
    constexpr int depth = 10;
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        SystemConfig sys;
        sys.num_symbols = 30;
        sys.num_devices = 60;
        sys.num_antennas = 1; // single column: row shrinkage equals scalar shrinkage
        sys.p_active = 0.1;
        sys.snr_db = 20.0;
        sys.seed = 0x1E17 + i;
        CMat sig = gen_signature(SignatureKind::gaussian, sys.num_symbols, sys.num_devices,
                                 sys.seed);
        Sample sample = gen_sample(sig, sys, stream_domain::probe, i);
        Mat s_lift = lift_operator(sig);

        double reg_weight = 0.2;
        NetworkParams params = init_params(Variant::lpomcp_gs, s_lift, depth, reg_weight);
        for (LayerParams &lp : params.layers)
            lp.nonconvexity = 0.0; // degenerate to the plain soft threshold

        IstaConfig cfg;
        cfg.reg_weight = reg_weight;
        cfg.max_iters = depth;
        IstaResult res = ista_gs(s_lift, sample.y_lift, cfg);
        Trajectory traj = forward(params, s_lift, sample.y_lift);
        if (res.estimates.size() != traj.estimates.size()) {
            r.detail = "trajectory lengths differ";
            return r;
        }
        for (size_t k = 0; k < res.estimates.size(); ++k) {
            double dev = (res.estimates[k] - traj.estimates[k]).cwiseAbs().maxCoeff();
            worst = std::max(worst, dev);
            if (dev > 1e-12) {
                r.detail = "iterate " + std::to_string(k) + " deviates by " + fmt(dev) +
                           " (tol 1e-12) on instance " + std::to_string(i);
                return r;
            }
        }
    }
    r.passed = true;
    r.detail = "5 instances x 10 iterations, worst entry deviation " + fmt(worst) +
               " (tol 1e-12)";
    return r;
}

// --- no-false-positive property under the coherence-derived thresholds -----

CheckResult check_support_containment() {
    CheckResult r;
    r.name = "support_containment_probe";
    constexpr int depth = 16;
    constexpr double tol = 1e-12;

    SystemConfig sys;
    sys.num_symbols = 60;
    sys.num_devices = 120;
    sys.num_antennas = 2;
    sys.p_active = 0.1;
    sys.snr_db = std::numeric_limits<double>::infinity();
    sys.seed = 0x5EED5;
    CMat sig = gen_signature(SignatureKind::gaussian, sys.num_symbols, sys.num_devices, sys.seed);
    Mat s_lift = lift_operator(sig);
    std::vector<Sample> batch;
    for (std::uint64_t i = 0; i < 50; ++i)
        batch.push_back(gen_sample(sig, sys, stream_domain::probe, i));

    Mat weights = analytic_weight_closed_form(s_lift);
    CoherenceReport rep = coherence_report(weights, s_lift);
    double epsilon = 0.0;
    for (const Sample &s : batch)
        epsilon = std::max(epsilon, (s.y_lift - s_lift * s.x_lift).norm());

    std::vector<Mat> iterates;
    for (const Sample &s : batch)
        iterates.push_back(Mat::Zero(s_lift.cols(), s.y_lift.cols()));

    double final_dev = 0.0;
    int nonzero_final = 0;
    for (int k = 0; k < depth; ++k) {
        double dev = 0.0;
        for (size_t i = 0; i < batch.size(); ++i)
            dev = std::max(dev, norm_l21(iterates[i] - batch[i].x_lift));
        McpParams p;
        p.threshold = rep.phi_hat * dev + rep.mu_b * epsilon;
        p.nonconvexity = p.threshold > 1e-300 ? 0.25 / (2.0 * p.threshold) : 0.0;
        for (size_t i = 0; i < batch.size(); ++i) {
            Mat pre = iterates[i] + weights * (batch[i].y_lift - s_lift * iterates[i]);
            iterates[i] = mcp_prox(pre, p);
            if (!support_contained(iterates[i], batch[i].x_lift, tol)) {
                r.detail = "spurious active row at layer " + std::to_string(k + 1) +
                           ", sample " + std::to_string(i);
                return r;
            }
        }
        if (k == depth - 1) {
            for (size_t i = 0; i < batch.size(); ++i) {
                final_dev = std::max(final_dev, norm_l21(iterates[i] - batch[i].x_lift));
                if (iterates[i].norm() > 0.0)
                    ++nonzero_final;
            }
        }
    }
    r.passed = true;
    std::ostringstream os;
    os << "16 layers x 50 samples contained (zero-row tol 1e-12); " << nonzero_final
       << "/50 final iterates nonzero, max final deviation " << fmt(final_dev);
    r.detail = os.str();
    return r;
}

} // namespace

std::vector<CheckResult> run_verification(const VerifyOptions &opts) {
    static const char *known[] = {"prox_matches_grid_oracle",  "gradients_match_finite_diff",
                                  "pgd_matches_closed_form",   "ista_objective_monotone",
                                  "unfolded_init_matches_ista", "support_containment_probe"};
    for (const std::string &n : opts.only) {
        bool found = false;
        for (const char *k : known)
            found = found || n == k;
        if (!found)
            throw_invalid("unknown self check '" + n + "'");
    }

    std::vector<CheckResult> out;
    auto wanted = [&opts](const char *name) {
        if (opts.only.empty())
            return true;
        for (const std::string &n : opts.only)
            if (n == name)
                return true;
        return false;
    };
    auto timed = [&](const std::function<CheckResult()> &fn, const char *name) {
        if (!wanted(name))
            return;
        auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = fn();
        } catch (const std::exception &e) {
            r.name = name;
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    };

    timed([&opts] { return check_prox_oracle(opts); }, "prox_matches_grid_oracle");
    timed(check_gradients, "gradients_match_finite_diff");
    timed(check_analytic_weights, "pgd_matches_closed_form");
    timed(check_ista_monotone, "ista_objective_monotone");
    timed(check_init_equivalence, "unfolded_init_matches_ista");
    timed(check_support_containment, "support_containment_probe");
    return out;
}

std::string format_verification_report(std::span<const CheckResult> results) {
    std::ostringstream os;
    for (const CheckResult &r : results) {
        os << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " (";
        os.precision(2);
        os << std::fixed << r.seconds << " s)";
        if (!r.detail.empty())
            os << " " << r.detail;
        os << "\n";
    }
    return os.str();
}

bool all_checks_passed(std::span<const CheckResult> results) {
    for (const CheckResult &r : results)
        if (!r.passed)
            return false;
    return true;
}

} // namespace jadce
