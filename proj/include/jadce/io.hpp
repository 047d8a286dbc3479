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
#include <filesystem>
#include <string>
#include <vector>

#include "jadce/types.hpp"

namespace jadce {

std::string base64_encode(const std::uint8_t *data, size_t len);
std::vector<std::uint8_t> base64_decode(const std::string &text);

/// FNV-1a over a byte stream; used to fingerprint signature matrices.
std::uint64_t fnv1a(const std::uint8_t *data, size_t len);

/// Hash of a matrix as the FNV-1a of its column-major little-endian f64
/// payload; complex matrices hash real parts then imaginary parts.
std::uint64_t hash_matrix(const Mat &m);
std::uint64_t hash_matrix(const CMat &m);

/// Matrices travel through containers as {rows, cols, base64 of column-major
/// little-endian f64}, which round-trips every finite and non-finite value
/// bit for bit.
std::string encode_matrix_payload(const Mat &m);
Mat decode_matrix_payload(const std::string &payload, Eigen::Index rows, Eigen::Index cols);

/// Shortest round-trip decimal form of a double; locale independent, suitable
/// for byte-reproducible CSV output.
std::string format_double(double v);

/// Write-then-rename so readers never observe a partially written file.
void atomic_write_file(const std::filesystem::path &path, const std::string &content);

std::string read_file(const std::filesystem::path &path);

} // namespace jadce
