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

#include "frontends/embedders.hpp"

#include <numeric>

#include "numerics/ops.hpp"

namespace omnipt {

std::array<float, kLocationWidth> location_feature(float x1, float y1, float x2, float y2) {
  if (!(0.0f <= x1 && x1 < x2 && x2 <= 1.0f && 0.0f <= y1 && y1 < y2 && y2 <= 1.0f)) {
    throw ValidationError("location_feature: box is not a normalized non-empty box");
  }
  const float w = x2 - x1;
  const float h = y2 - y1;
  return {x1, y1, x2, y2, w, h, w * h};
}

bool is_valid_location(std::span<const float> row) {
  if (row.size() != kLocationWidth) return false;
  const float x1 = row[0], y1 = row[1], x2 = row[2], y2 = row[3];
  if (!(0.0f <= x1 && x1 < x2 && x2 <= 1.0f && 0.0f <= y1 && y1 < y2 && y2 <= 1.0f)) return false;
  const float w = x2 - x1;
  const float h = y2 - y1;
  return row[4] == w && row[5] == h && row[6] == w * h;
}

namespace {

std::vector<std::size_t> positions(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

}  // namespace

template <typename T>
TextEmbedder<T> TextEmbedder<T>::create(ParameterSet<T>& params, const ModelConfig& config,
                                        std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  TextEmbedder e;
  e.token_table = params.add_normal("text.token_emb", {static_cast<std::size_t>(config.vocab_size), d}, rng);
  e.position_table = params.add_normal("text.pos_emb", {static_cast<std::size_t>(config.max_text_len), d}, rng);
  e.ln_gain = params.add_ones("text.ln.gain", {d});
  e.ln_bias = params.add_zeros("text.ln.bias", {d});
  e.ln_epsilon = config.ln_epsilon;
  return e;
}

template <typename T>
VisionEmbedder<T> VisionEmbedder<T>::create(ParameterSet<T>& params, const ModelConfig& config,
                                            std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  VisionEmbedder e;
  e.feature_weight = params.add_normal("vision.feat.w", {static_cast<std::size_t>(config.d_v), d}, rng);
  e.feature_bias = params.add_zeros("vision.feat.b", {d});
  e.location_weight = params.add_normal("vision.loc.w", {kLocationWidth, d}, rng);
  e.location_bias = params.add_zeros("vision.loc.b", {d});
  e.ln_gain = params.add_ones("vision.ln.gain", {d});
  e.ln_bias = params.add_zeros("vision.ln.bias", {d});
  e.ln_epsilon = config.ln_epsilon;
  return e;
}

template <typename T>
AudioEmbedder<T> AudioEmbedder<T>::create(ParameterSet<T>& params, const ModelConfig& config,
                                          std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  AudioEmbedder e;
  e.frame_weight = params.add_normal("audio.frame.w", {static_cast<std::size_t>(config.d_a), d}, rng);
  e.frame_bias = params.add_zeros("audio.frame.b", {d});
  e.position_table = params.add_normal("audio.pos_emb", {static_cast<std::size_t>(config.max_audio_len), d}, rng);
  e.ln_gain = params.add_ones("audio.ln.gain", {d});
  e.ln_bias = params.add_zeros("audio.ln.bias", {d});
  e.ln_epsilon = config.ln_epsilon;
  return e;
}

template <typename T>
Tensor<T> embed_text(const TextEmbedder<T>& embedder, std::span<const int> ids) {
  if (ids.empty()) throw ValidationError("embed_text: no tokens");
  if (ids.size() > embedder.position_table.rows()) {
    throw ValidationError("embed_text: " + std::to_string(ids.size()) +
                          " tokens exceed max_text_len " +
                          std::to_string(embedder.position_table.rows()));
  }
  const auto vocab = static_cast<int>(embedder.token_table.rows());
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw ValidationError("embed_text: token id " + std::to_string(id) +
                            " >= vocab_size " + std::to_string(vocab));
    }
  }
  const auto pos = positions(ids.size());
  auto x = add(embedding(embedder.token_table, ids),
               gather_rows(embedder.position_table, std::span<const std::size_t>(pos)));
  return layer_norm(x, embedder.ln_gain, embedder.ln_bias, embedder.ln_epsilon);
}

template <typename T>
Tensor<T> embed_vision(const VisionEmbedder<T>& embedder, const FeatureMatrix& features,
                       const FeatureMatrix& locations) {
  if (features.rows == 0) throw ValidationError("embed_vision: no regions");
  if (features.cols != embedder.feature_weight.rows()) {
    throw ValidationError("embed_vision: feature width " + std::to_string(features.cols) +
                          ", expected " + std::to_string(embedder.feature_weight.rows()));
  }
  if (locations.cols != kLocationWidth || locations.rows != features.rows) {
    throw ValidationError("embed_vision: locations must be K x 7");
  }
  auto f = linear(to_tensor<T>(features), embedder.feature_weight, embedder.feature_bias);
  auto l = linear(to_tensor<T>(locations), embedder.location_weight, embedder.location_bias);
  return layer_norm(add(f, l), embedder.ln_gain, embedder.ln_bias, embedder.ln_epsilon);
}

template <typename T>
Tensor<T> embed_audio(const AudioEmbedder<T>& embedder, const FeatureMatrix& frames) {
  if (frames.rows == 0) throw ValidationError("embed_audio: no frames");
  if (frames.cols != embedder.frame_weight.rows()) {
    throw ValidationError("embed_audio: frame width " + std::to_string(frames.cols) +
                          ", expected " + std::to_string(embedder.frame_weight.rows()));
  }
  if (frames.rows > embedder.position_table.rows()) {
    throw ValidationError("embed_audio: " + std::to_string(frames.rows) +
                          " frames exceed max_audio_len");
  }
  const auto pos = positions(frames.rows);
  auto x = add(linear(to_tensor<T>(frames), embedder.frame_weight, embedder.frame_bias),
               gather_rows(embedder.position_table, std::span<const std::size_t>(pos)));
  return layer_norm(x, embedder.ln_gain, embedder.ln_bias, embedder.ln_epsilon);
}

#define OMNIPT_INSTANTIATE_FRONTENDS(T)                                                  \
  template struct TextEmbedder<T>;                                                       \
  template struct VisionEmbedder<T>;                                                     \
  template struct AudioEmbedder<T>;                                                      \
  template Tensor<T> embed_text(const TextEmbedder<T>&, std::span<const int>);           \
  template Tensor<T> embed_vision(const VisionEmbedder<T>&, const FeatureMatrix&,        \
                                  const FeatureMatrix&);                                 \
  template Tensor<T> embed_audio(const AudioEmbedder<T>&, const FeatureMatrix&);

OMNIPT_INSTANTIATE_FRONTENDS(float)
OMNIPT_INSTANTIATE_FRONTENDS(double)

}  // namespace omnipt
