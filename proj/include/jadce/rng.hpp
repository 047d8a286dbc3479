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

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace jadce {

/// Finalizer of the splitmix64 generator; bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

/// Stream-splitting contract: every random quantity in the library is drawn
/// from the stream identified by (seed, domain, index).  The triple is hashed
/// into a single engine seed by chaining mix64, so streams are independent and
/// a sample can be regenerated in isolation.  Domains currently in use:
///   0 signature matrix, 1 training sample, 2 test sample, 3 internal probes.
/// The per-sample index is the position of the sample within its split.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t domain,
                                 std::uint64_t index = 0) {
    std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ull);
    h = mix64(h ^ (domain + 0xD1B54A32D192ED03ull));
    h = mix64(h ^ (index + 0x8CB92BA72F3D8DD7ull));
    return h;
}

namespace stream_domain {
inline constexpr std::uint64_t signature = 0;
inline constexpr std::uint64_t train_sample = 1;
inline constexpr std::uint64_t test_sample = 2;
inline constexpr std::uint64_t probe = 3;
} // namespace stream_domain

/// Deterministic random source.  The engine is the standardized mt19937_64 and
/// all distributions are hand-evaluated (53-bit uniforms, Box-Muller normals),
/// so a given (seed, domain, index) yields identical draws on every platform
/// and standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t engine_seed) : engine_(engine_seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) {
        return Rng(stream_seed(seed, domain, index));
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; draws are consumed in pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1], keeps log() finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Circularly symmetric complex normal with unit variance:
    /// real and imaginary parts are independent N(0, 1/2).
    std::complex<double> cnormal() {
        constexpr double half_scale = 0.70710678118654752440; // sqrt(1/2)
        double re = normal() * half_scale;
        double im = normal() * half_scale;
        return {re, im};
    }

    /// Fair sign draw, +1 or -1.
    double sign() { return (engine_() & 1ull) ? 1.0 : -1.0; }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace jadce
