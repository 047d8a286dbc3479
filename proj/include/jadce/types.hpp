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

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace jadce {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;

/// Error categories mirrored one-to-one by the C API status codes.
enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    numerical,
    io,
    schema,
    hash_mismatch,
    internal,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// Power iteration ran out of iterations; carries the last estimate so the
/// caller can inspect how far the iteration got.
class PowerIterationError : public Error {
  public:
    PowerIterationError(const std::string &what, double last_estimate)
        : Error(ErrorCode::numerical, what), last_estimate_(last_estimate) {}
    double last_estimate() const noexcept { return last_estimate_; }

  private:
    double last_estimate_;
};

[[noreturn]] inline void throw_invalid(const std::string &msg) {
    throw Error(ErrorCode::invalid_argument, msg);
}

[[noreturn]] inline void throw_dims(const std::string &msg) {
    throw Error(ErrorCode::dimension_mismatch, msg);
}

[[noreturn]] inline void throw_numerical(const std::string &msg) {
    throw Error(ErrorCode::numerical, msg);
}

inline void require_finite(const Mat &m, const char *name) {
    if (!m.allFinite())
        throw Error(ErrorCode::invalid_argument, std::string(name) + " contains NaN or Inf");
}

inline void require_finite(const CMat &m, const char *name) {
    if (!m.real().allFinite() || !m.imag().allFinite())
        throw Error(ErrorCode::invalid_argument, std::string(name) + " contains NaN or Inf");
}

} // namespace jadce
