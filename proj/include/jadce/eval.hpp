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

#include <span>
#include <vector>

#include "jadce/model_gen.hpp"
#include "jadce/types.hpp"

namespace jadce {

/// Sentinel returned by nmse_db on exact recovery (zero error energy).
inline constexpr double exact_recovery_db = -350.0;

/// Sum of row l2 norms.
double norm_l21(const Mat &m);

/// Batch NMSE in dB: 10*log10 of summed error energy over summed reference
/// energy.  Throws when the reference batch carries no energy at all.
double nmse_db(std::span<const Mat> estimates, std::span<const Mat> truths);
double nmse_db(const Mat &estimate, const Mat &truth);

/// Mean l1 distance between the row-norm profiles of estimate and truth,
/// normalized by the number of lifted rows:
///   (1/(V*2N)) * sum_i || psi(Xhat_i) - psi(X_i) ||_1.
double error_rate(std::span<const Mat> estimates, std::span<const Mat> truths);

/// Device n is declared active when the combined energy of its two lifted
/// rows exceeds tau: sqrt(||row_n||^2 + ||row_{n+N}||^2) > tau.
std::vector<std::uint8_t> detect_activity(const Mat &x_lift, double tau);

/// Default detection threshold, calibrated on training ground truth:
/// 0.1 * sqrt(M) * median of the nonzero combined row norms.
double default_activity_threshold(std::span<const Sample> train_samples);

/// True when every row of the estimate with norm above `tol` indexes a row of
/// the truth with norm above `tol`; loosening `tol` never flips true to false
/// on group-sparse truths with well-separated active rows.
bool support_contained(const Mat &estimate, const Mat &truth, double tol = 1e-12);

/// Miss / false-alarm counts of thresholded detection against ground truth.
struct DetectionCounts {
    long misses = 0;
    long false_alarms = 0;
};
DetectionCounts detection_counts(const Mat &x_lift, std::span<const std::uint8_t> activity,
                                 double tau);

/// Least-squares fit of an NMSE-vs-layer curve (dB) restricted to layers at
/// least 3 dB above the noise floor.  The fitted slope maps to the linear
/// convergence rate c1 = -slope * ln(10) / 20.  Throws when fewer than 4
/// layers are usable.
struct RateFit {
    double slope_db_per_layer = 0.0;
    double intercept_db = 0.0;
    double c1 = 0.0;
    double r2 = 0.0;
    int used_layers = 0;
};
RateFit fit_linear_rate(std::span<const double> nmse_curve_db, double noise_floor_db);

/// Quantities appearing in the recovery guarantees, measured on a batch.
struct TheoremProbe {
    double mu_x = 0.0;    // largest row norm of any ground truth
    int sparsity = 0;     // largest lifted support size
    double epsilon = 0.0; // largest noise Frobenius norm ||Y - S*X||_F
    double mu_b = 0.0;    // sum of row norms of the weight matrix
    double phi_hat = 0.0; // largest off-diagonal response |(B*S)_ij|
    double c1_fit = 0.0;  // fitted linear rate (0 when not fitted)
    double c2_fit = 0.0;  // final error over epsilon (0 in the noiseless case)
};
TheoremProbe theorem_probe(const Mat &weights, const Mat &s_lift, std::span<const Sample> batch,
                           double support_tol = 1e-12);

} // namespace jadce
