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

#include <cstddef>
#include <span>
#include <vector>

#include "common/error.hpp"
#include "numerics/tensor.hpp"

namespace omnipt {

enum class Modality { kText = 0, kVision = 1, kAudio = 2 };

const char* modality_name(Modality m);

// Row-major float matrix used for raw inputs (region features, locations,
// audio frames, pixels). Stored at 32-bit regardless of model precision.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

  std::span<float> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  bool empty() const { return rows == 0; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

template <typename T>
Tensor<T> to_tensor(const FeatureMatrix& m) {
  if (m.rows == 0 || m.cols == 0) throw DimensionError("to_tensor: empty feature matrix");
  std::vector<T> data(m.values.begin(), m.values.end());
  return Tensor<T>::from_data({m.rows, m.cols}, std::move(data));
}

}  // namespace omnipt
