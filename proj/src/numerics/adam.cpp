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

#include "numerics/adam.hpp"

#include <cmath>

namespace omnipt {

template <typename T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state) {
  if (state.learning_rate <= 0.0) throw ValidationError("adam: learning rate must be positive");
  auto& list = params.list();
  if (state.first_moment.empty()) {
    for (const auto& p : list) {
      state.first_moment.emplace_back(p.tensor.numel(), T{0});
      state.second_moment.emplace_back(p.tensor.numel(), T{0});
    }
  }
  if (state.first_moment.size() != list.size()) {
    throw DimensionError("adam: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " parameters, model has " +
                         std::to_string(list.size()));
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (state.first_moment[i].size() != list[i].tensor.numel()) {
      throw DimensionError("adam: moment shape mismatch for " + list[i].name);
    }
    if (!all_finite(list[i].tensor.grad())) {
      throw NumericError("adam: non-finite gradient in parameter " + list[i].name);
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < list.size(); ++i) {
    auto grad = list[i].tensor.grad();
    if (grad.empty()) continue;  // never reached by backward
    auto values = list[i].tensor.data_mut();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = state.learning_rate * (mj / bc1) / (std::sqrt(vj / bc2) + state.epsilon);
      values[j] = static_cast<T>(values[j] - update);
    }
  }
}

template void adam_step<float>(ParameterSet<float>&, AdamState<float>&);
template void adam_step<double>(ParameterSet<double>&, AdamState<double>&);

}  // namespace omnipt
