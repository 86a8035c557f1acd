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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "numerics/tensor.hpp"

namespace omnipt {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

// Ordered registry of trainable leaves. Order is the registration order and
// is what checkpoints and the optimizer iterate over.
template <typename T>
class ParameterSet {
 public:
  // Registers a leaf and returns a handle sharing its node.
  // Weight matrices and embeddings: normal(0, 0.02).
  Tensor<T> add_normal(const std::string& name, Shape shape, std::mt19937_64& rng,
                       double stddev = 0.02);
  Tensor<T> add_zeros(const std::string& name, Shape shape);
  Tensor<T> add_ones(const std::string& name, Shape shape);
  Tensor<T> add(const std::string& name, Tensor<T> tensor);

  const std::vector<NamedParameter<T>>& list() const { return params_; }
  std::vector<NamedParameter<T>>& list() { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;

  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);

  void zero_grad();
  // Scales all gradients so their global L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  double grad_norm() const;

 private:
  std::vector<NamedParameter<T>> params_;
};

}  // namespace omnipt
