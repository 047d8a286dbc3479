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

#include <cstdint>
#include <string>
#include <vector>

#include "jadce/types.hpp"

namespace jadce {

/// Uplink model: a base station with M antennas observes L symbols of the
/// superimposed signatures of N devices, of which a Bernoulli(p_active)
/// subset transmits.  Received signal Y = S*X + Z with X = A*H group-row
/// sparse (a device's row of X is zero or carries its full antenna vector).
struct SystemConfig {
    int num_symbols = 100;    // L, signature length
    int num_devices = 200;    // N
    int num_antennas = 2;     // M
    double p_active = 0.1;    // device activity probability
    double snr_db = 40.0;     // +inf disables noise
    std::uint64_t seed = 1;

    void validate() const;
};

enum class SignatureKind { gaussian, binary, conditioned };

SignatureKind signature_kind_from_string(const std::string &name);
std::string to_string(SignatureKind kind);

/// Complex system mapped to the real domain.  The operator keeps the
/// rotation-block structure [[Re, -Im], [Im, Re]]; signals stack real on top
/// of imaginary parts, so device n owns rows n and n + N of the lifted X.
struct LiftedSystem {
    Mat s_lift; // 2L x 2N
    Mat y_lift; // 2L x M
    Mat x_lift; // 2N x M  (empty when ground truth is not carried)
};

/// Lift of a complex operator to its real rotation-block form (2r x 2c).
Mat lift_operator(const CMat &a);

/// Lift of a complex signal to stacked real/imaginary rows (2r x c).
Mat lift_signal(const CMat &a);

CMat unlift_operator(const Mat &a);
CMat unlift_signal(const Mat &a);

/// True when the four blocks of `a` are consistent with a lifted operator.
bool is_lifted_operator(const Mat &a, double tol = 0.0);

/// Draw an L x N signature matrix.
///  - gaussian: entries circularly symmetric complex normal, unit variance.
///  - binary: real equiprobable +/-1 entries.
///  - conditioned: gaussian draw re-spectralized to a geometric singular value
///    ramp so the condition number equals `kappa` exactly.
CMat gen_signature(SignatureKind kind, int num_symbols, int num_devices, std::uint64_t seed,
                   double kappa = 1.0);

/// One generated instance.  Lifted forms are the ground truth carried through
/// training and evaluation; y_lift is computed in the real domain so the
/// zero-noise case satisfies y_lift == s_lift * x_lift bitwise.
struct Sample {
    std::vector<std::uint8_t> activity; // N flags
    CMat channel;                       // N x M, zero rows for inactive devices
    double sigma2 = 0.0;                // per-sample calibrated noise variance
    Mat x_lift;                         // 2N x M
    Mat y_lift;                         // 2L x M
};

/// Generate the sample of stream (cfg.seed, domain, index).  Noise variance is
/// calibrated per sample so that ||S*X||_F^2 / (sigma2*L*M) equals the target
/// linear SNR; an all-inactive sample falls back to the ensemble signal power
/// p_active*N*L*M.  snr_db = +inf produces sigma2 = 0 and exact y = S*x.
Sample gen_sample(const CMat &signature, const SystemConfig &cfg, std::uint64_t domain,
                  std::uint64_t index);

struct Dataset {
    SystemConfig config;
    SignatureKind kind = SignatureKind::gaussian;
    double kappa = 1.0;
    CMat signature; // L x N
    Mat s_lift;     // cached lift of `signature`
    std::vector<Sample> samples;

    /// Hash of the signature bytes; stored in checkpoints so that training and
    /// evaluation artifacts can be matched to the dataset they belong to.
    std::uint64_t signature_hash() const;
};

/// Generate `count` samples over the given stream domain and package them with
/// the signature.  Samples are reproducible individually from (seed, index).
Dataset gen_dataset(const CMat &signature, SignatureKind kind, double kappa,
                    const SystemConfig &cfg, std::uint64_t domain, int count);

} // namespace jadce
