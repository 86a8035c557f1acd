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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "encoder/model_config.hpp"
#include "numerics/forward_context.hpp"
#include "numerics/parameters.hpp"

namespace omnipt {

// allowed[i * keys + j] != 0 iff query i may attend to key j.
using AttentionMask = std::vector<std::uint8_t>;

AttentionMask padding_mask(std::span<const std::uint8_t> valid);
AttentionMask causal_mask(std::size_t length);
AttentionMask cross_mask(std::size_t queries, std::span<const std::uint8_t> key_valid);

template <typename T>
struct KeyValue {
  Tensor<T> keys;
  Tensor<T> values;
};

template <typename T>
struct MultiHeadAttention {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t n_heads = 1;

  static MultiHeadAttention create(ParameterSet<T>& params, const std::string& prefix,
                                   const ModelConfig& config, std::mt19937_64& rng);

  KeyValue<T> project(const Tensor<T>& source) const;
  // Attention of `query_source` rows over precomputed keys/values. When
  // `weights_out` is given, the per-head attention matrices are appended.
  Tensor<T> attend(const Tensor<T>& query_source, const KeyValue<T>& kv,
                   std::span<const std::uint8_t> allowed,
                   std::vector<Tensor<T>>* weights_out = nullptr) const;
  Tensor<T> forward(const Tensor<T>& query_source, const Tensor<T>& kv_source,
                    std::span<const std::uint8_t> allowed,
                    std::vector<Tensor<T>>* weights_out = nullptr) const {
    return attend(query_source, project(kv_source), allowed, weights_out);
  }
};

template <typename T>
struct FeedForward {
  Tensor<T> w1, b1, w2, b2;

  static FeedForward create(ParameterSet<T>& params, const std::string& prefix,
                            const ModelConfig& config, std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx) const;
};

template <typename T>
struct LayerNormParams {
  Tensor<T> gain, bias;
  double epsilon = 1e-5;

  static LayerNormParams create(ParameterSet<T>& params, const std::string& prefix,
                                const ModelConfig& config);
  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gain, bias, epsilon); }
};

}  // namespace omnipt
