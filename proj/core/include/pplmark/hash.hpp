// Copyright 2026 The pplmark Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pplmark {

// Stable 64-bit FNV-1a content fingerprint. Used for run manifests and fold
// cache keys; not a cryptographic hash.
class Fnv1a64 {
 public:
  void update(std::string_view bytes);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fnv1a_hex(std::string_view bytes);
std::string file_fnv1a_hex(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never observe a
// half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace pplmark
