/* Copyright 2026 The OmniPT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "numerics/parameters.hpp"

namespace omnipt {

inline constexpr int kArchiveVersion = 1;

enum class DType { kF32, kF64 };
const char* dtype_name(DType dtype);
DType parse_dtype(const std::string& name);

template <typename T>
constexpr DType dtype_of() {
  return sizeof(T) == 8 ? DType::kF64 : DType::kF32;
}

struct ArchiveArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

// Named arrays plus free-form metadata. On disk:
//   8-byte magic "OMNIPTAR", uint64 LE header length, UTF-8 text header,
//   then each array's values in header order as little-endian f32 or f64.
// Header lines: "version N", "dtype f32|f64", "kind K", "meta <key> <value>",
// "array <name> <d0> <d1> ...".
struct Archive {
  std::string kind;
  DType dtype = DType::kF32;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<ArchiveArray> arrays;

  void set_meta(const std::string& key, std::string value);
  bool has_meta(const std::string& key) const;
  // Throws ParseError when absent.
  const std::string& meta_value(const std::string& key) const;
  const ArchiveArray* find(const std::string& name) const;
};

// Written to a temporary sibling and renamed into place.
void write_archive(const std::filesystem::path& path, const Archive& archive);
// Validates magic, version, header and exact payload length before returning.
Archive read_archive(const std::filesystem::path& path);

// Appends every parameter under `prefix + name`.
template <typename T>
void store_parameters(const ParameterSet<T>& params, Archive& archive,
                      const std::string& prefix = "");

// All-or-nothing: every parameter must be present with a matching shape
// before any value is overwritten. Errors name the offending parameter.
template <typename T>
void load_parameters(ParameterSet<T>& params, const Archive& archive,
                     const std::string& prefix = "");

}  // namespace omnipt
