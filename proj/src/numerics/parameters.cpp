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

#include "numerics/parameters.hpp"

namespace omnipt {

template <typename T>
Tensor<T> ParameterSet<T>::add(const std::string& name, Tensor<T> tensor) {
  for (const auto& p : params_) {
    if (p.name == name) throw ContractError("duplicate parameter name " + name);
  }
  tensor.set_requires_grad(true);
  params_.push_back({name, std::move(tensor)});
  return params_.back().tensor;
}

template <typename T>
Tensor<T> ParameterSet<T>::add_normal(const std::string& name, Shape shape,
                                       std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return add(name, Tensor<T>::from_data(std::move(shape), std::move(values)));
}

template <typename T>
Tensor<T> ParameterSet<T>::add_zeros(const std::string& name, Shape shape) {
  return add(name, Tensor<T>::zeros(std::move(shape)));
}

template <typename T>
Tensor<T> ParameterSet<T>::add_ones(const std::string& name, Shape shape) {
  return add(name, Tensor<T>::full(std::move(shape), T{1}));
}

template <typename T>
std::size_t ParameterSet<T>::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
const Tensor<T>& ParameterSet<T>::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ContractError("no parameter named " + name);
}

template <typename T>
Tensor<T>& ParameterSet<T>::get(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ContractError("no parameter named " + name);
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  // Allocates as well, so leaves a backward pass never reaches read as zero.
  for (auto& p : params_) {
    p.tensor.grad_mut();
    p.tensor.zero_grad();
  }
}

template <typename T>
double ParameterSet<T>::grad_norm() const {
  double ss = 0.0;
  for (const auto& p : params_) {
    for (T g : p.tensor.grad()) ss += static_cast<double>(g) * g;
  }
  return std::sqrt(ss);
}

template <typename T>
double ParameterSet<T>::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params_) {
      if (p.tensor.grad().empty()) continue;
      for (auto& g : p.tensor.grad_mut()) g *= factor;
    }
  }
  return norm;
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace omnipt
