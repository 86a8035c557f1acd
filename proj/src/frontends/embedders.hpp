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

#include <array>
#include <random>
#include <span>
#include <vector>

#include "common/features.hpp"
#include "encoder/model_config.hpp"
#include "frontends/vocabulary.hpp"
#include "numerics/parameters.hpp"

namespace omnipt {

inline constexpr std::size_t kLocationWidth = 7;

// Detected (here: rendered) regions of one image.
struct RegionSet {
  FeatureMatrix features;   // K x d_v
  FeatureMatrix locations;  // K x 7
  std::vector<int> pseudo_labels;

  std::size_t count() const { return features.rows; }
  friend bool operator==(const RegionSet&, const RegionSet&) = default;
};

struct AudioTokens {
  FeatureMatrix features;  // Q x d_a
  std::size_t count() const { return features.rows; }
  friend bool operator==(const AudioTokens&, const AudioTokens&) = default;
};

// [x1, y1, x2, y2, w, h, w*h] for a box in normalized image coordinates.
// Requires 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1.
std::array<float, kLocationWidth> location_feature(float x1, float y1, float x2, float y2);
// True when the row satisfies the box bounds and the w, h, w*h identities
// exactly at 32-bit.
bool is_valid_location(std::span<const float> row);

template <typename T>
struct TextEmbedder {
  Tensor<T> token_table;     // vocab x d_h
  Tensor<T> position_table;  // max_text_len x d_h
  Tensor<T> ln_gain;
  Tensor<T> ln_bias;
  double ln_epsilon = 1e-5;

  static TextEmbedder create(ParameterSet<T>& params, const ModelConfig& config,
                             std::mt19937_64& rng);
};

template <typename T>
struct VisionEmbedder {
  Tensor<T> feature_weight;  // d_v x d_h
  Tensor<T> feature_bias;
  Tensor<T> location_weight;  // 7 x d_h
  Tensor<T> location_bias;
  Tensor<T> ln_gain;
  Tensor<T> ln_bias;
  double ln_epsilon = 1e-5;

  static VisionEmbedder create(ParameterSet<T>& params, const ModelConfig& config,
                               std::mt19937_64& rng);
};

template <typename T>
struct AudioEmbedder {
  Tensor<T> frame_weight;  // d_a x d_h
  Tensor<T> frame_bias;
  Tensor<T> position_table;  // max_audio_len x d_h
  Tensor<T> ln_gain;
  Tensor<T> ln_bias;
  double ln_epsilon = 1e-5;

  static AudioEmbedder create(ParameterSet<T>& params, const ModelConfig& config,
                              std::mt19937_64& rng);
};

// LN(token_emb[id] + pos_emb[position]) per token.
template <typename T>
Tensor<T> embed_text(const TextEmbedder<T>& embedder, std::span<const int> ids);

// LN(FC(features) + FC(locations)) per region.
template <typename T>
Tensor<T> embed_vision(const VisionEmbedder<T>& embedder, const FeatureMatrix& features,
                       const FeatureMatrix& locations);

// LN(FC(frames) + pos_emb[position]) per frame.
template <typename T>
Tensor<T> embed_audio(const AudioEmbedder<T>& embedder, const FeatureMatrix& frames);

}  // namespace omnipt
