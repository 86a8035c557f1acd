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

#include "encoder/attention.hpp"

#include <cmath>

namespace omnipt {

AttentionMask padding_mask(std::span<const std::uint8_t> valid) {
  const std::size_t n = valid.size();
  AttentionMask mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    for (std::size_t j = 0; j < n; ++j) mask[i * n + j] = valid[j];
  }
  return mask;
}

AttentionMask causal_mask(std::size_t length) {
  AttentionMask mask(length * length, 0);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t j = 0; j <= i; ++j) mask[i * length + j] = 1;
  return mask;
}

AttentionMask cross_mask(std::size_t queries, std::span<const std::uint8_t> key_valid) {
  AttentionMask mask;
  mask.reserve(queries * key_valid.size());
  for (std::size_t i = 0; i < queries; ++i) mask.insert(mask.end(), key_valid.begin(), key_valid.end());
  return mask;
}

template <typename T>
MultiHeadAttention<T> MultiHeadAttention<T>::create(ParameterSet<T>& params,
                                                    const std::string& prefix,
                                                    const ModelConfig& config,
                                                    std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  MultiHeadAttention a;
  a.wq = params.add_normal(prefix + ".wq", {d, d}, rng);
  a.bq = params.add_zeros(prefix + ".bq", {d});
  a.wk = params.add_normal(prefix + ".wk", {d, d}, rng);
  a.bk = params.add_zeros(prefix + ".bk", {d});
  a.wv = params.add_normal(prefix + ".wv", {d, d}, rng);
  a.bv = params.add_zeros(prefix + ".bv", {d});
  a.wo = params.add_normal(prefix + ".wo", {d, d}, rng);
  a.bo = params.add_zeros(prefix + ".bo", {d});
  a.n_heads = static_cast<std::size_t>(config.n_heads);
  return a;
}

template <typename T>
KeyValue<T> MultiHeadAttention<T>::project(const Tensor<T>& source) const {
  return {linear(source, wk, bk), linear(source, wv, bv)};
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::attend(const Tensor<T>& query_source, const KeyValue<T>& kv,
                                        std::span<const std::uint8_t> allowed,
                                        std::vector<Tensor<T>>* weights_out) const {
  const auto q = linear(query_source, wq, bq);
  const std::size_t d = q.cols();
  const std::size_t head_dim = d / n_heads;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));
  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const auto qh = slice_cols(q, h * head_dim, head_dim);
    const auto kh = slice_cols(kv.keys, h * head_dim, head_dim);
    const auto vh = slice_cols(kv.values, h * head_dim, head_dim);
    const auto weights = masked_softmax(scale(matmul_nt(qh, kh), inv_sqrt), allowed);
    if (weights_out) weights_out->push_back(weights);
    heads.push_back(matmul(weights, vh));
  }
  const auto merged = n_heads == 1 ? heads.front() : concat_cols(heads);
  return linear(merged, wo, bo);
}

template <typename T>
FeedForward<T> FeedForward<T>::create(ParameterSet<T>& params, const std::string& prefix,
                                      const ModelConfig& config, std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  const auto hidden = d * static_cast<std::size_t>(config.ffn_mult);
  FeedForward f;
  f.w1 = params.add_normal(prefix + ".w1", {d, hidden}, rng);
  f.b1 = params.add_zeros(prefix + ".b1", {hidden});
  f.w2 = params.add_normal(prefix + ".w2", {hidden, d}, rng);
  f.b2 = params.add_zeros(prefix + ".b2", {d});
  return f;
}

template <typename T>
Tensor<T> FeedForward<T>::forward(const Tensor<T>& x, const ForwardContext& ctx) const {
  return linear(ctx.drop(gelu(linear(x, w1, b1))), w2, b2);
}

template <typename T>
LayerNormParams<T> LayerNormParams<T>::create(ParameterSet<T>& params, const std::string& prefix,
                                              const ModelConfig& config) {
  const auto d = static_cast<std::size_t>(config.d_h);
  LayerNormParams ln;
  ln.gain = params.add_ones(prefix + ".gain", {d});
  ln.bias = params.add_zeros(prefix + ".bias", {d});
  ln.epsilon = config.ln_epsilon;
  return ln;
}

template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;
template struct LayerNormParams<float>;
template struct LayerNormParams<double>;

}  // namespace omnipt
