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

#include <filesystem>

#include "jadce/model_gen.hpp"
#include "jadce/training.hpp"

namespace jadce {

/// Self-describing JSON containers.  Matrix payloads are base64 of the
/// column-major little-endian f64 buffer (real and imaginary planes stored
/// separately), so every floating-point leaf round-trips bit for bit.  Writes
/// go through a temp file plus rename; a crash never leaves a partial file.
/// Schema tags: "jadce.dataset.v1" and "jadce.checkpoint.v1".

void save_dataset(const Dataset &ds, std::uint64_t split_domain,
                  const std::filesystem::path &path);

struct LoadedDataset {
    Dataset dataset;
    std::uint64_t split_domain = 0;
};
LoadedDataset load_dataset(const std::filesystem::path &path);

void save_checkpoint(const Checkpoint &cp, const std::filesystem::path &path);
Checkpoint load_checkpoint(const std::filesystem::path &path);

/// Hash rendered the way containers store it ("0x" + 16 hex digits).
std::string hash_to_string(std::uint64_t hash);
std::uint64_t hash_from_string(const std::string &text);

} // namespace jadce
