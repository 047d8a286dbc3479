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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jadce/prox.hpp"

namespace jadce {

struct CheckResult {
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    std::string detail; // measured extremum vs tolerance, or the failure cause
};

/// Hooks for mutation-sensitivity tests: swapping in a deliberately wrong
/// scalar activation must flip the oracle-equivalence check to failing.
struct VerifyOptions {
    std::function<double(double, const McpParams &)> prox_fn; // empty = built-in
    std::vector<std::string> only; // run just these checks; empty = all
};

/// Run the release-gate self checks, in order:
///   prox_matches_grid_oracle       activation vs brute-force scalar argmin
///   gradients_match_finite_diff    backprop vs central differences, all variants
///   pgd_matches_closed_form        constrained weight solver vs direct solution
///   ista_objective_monotone        descent property of the classical baseline
///   unfolded_init_matches_ista     network at init reproduces the baseline
///   support_containment_probe      no-false-positive property under the
///                                  coherence-derived threshold schedule
/// Deterministic; every check reports its wall time and a measured margin.
std::vector<CheckResult> run_verification(const VerifyOptions &opts = {});

/// One line per check: "[PASS] name (1.23 s) detail".
std::string format_verification_report(std::span<const CheckResult> results);

bool all_checks_passed(std::span<const CheckResult> results);

} // namespace jadce
