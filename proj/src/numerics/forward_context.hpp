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

#include <random>

#include "numerics/ops.hpp"

namespace omnipt {

// Train/eval switch threaded through every forward pass. Dropout is active
// only in training mode and draws from the supplied stream.
struct ForwardContext {
  bool training = false;
  double dropout_rate = 0.0;
  std::mt19937_64* rng = nullptr;

  static ForwardContext eval() { return {}; }
  static ForwardContext train(double rate, std::mt19937_64& stream) {
    return {true, rate, &stream};
  }

  template <typename T>
  Tensor<T> drop(const Tensor<T>& x) const {
    if (!training || rng == nullptr || dropout_rate <= 0.0) return x;
    return dropout(x, dropout_rate, *rng);
  }
};

}  // namespace omnipt
