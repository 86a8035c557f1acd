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
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "common/features.hpp"

namespace omnipt {

inline constexpr double kDefaultTokenMaskRate = 0.15;
inline constexpr double kDefaultModalityDropRate = 0.3;
inline constexpr int kMatchCases = 5;

struct TokenMaskPlan {
  Modality modality = Modality::kText;
  std::size_t length = 0;
  double rate = kDefaultTokenMaskRate;
  std::vector<std::size_t> masked;  // sorted, distinct, < length
};

struct ModalityMaskPlan {
  bool drop_text = false;
  bool drop_vision = false;
  bool drop_audio = false;

  bool all_dropped() const { return drop_text && drop_vision && drop_audio; }
  bool drops(Modality m) const;
  // Bit pattern text=1, vision=2, audio=4.
  int pattern() const { return (drop_text ? 1 : 0) | (drop_vision ? 2 : 0) | (drop_audio ? 4 : 0); }
  friend bool operator==(const ModalityMaskPlan&, const ModalityMaskPlan&) = default;
};

using MatchLabel = std::array<float, kMatchCases>;

// Which sample each modality of a corrupted triplet is taken from. A source
// equal to the sample's own index means "original".
struct CorruptionPlan {
  std::size_t text_source = 0;
  std::size_t vision_source = 0;
  std::size_t audio_source = 0;
  bool replace_text = false;
  bool replace_vision = false;
  bool replace_audio = false;
  int case_index = 0;  // 0..4 for cases (1)..(5)
  MatchLabel label{};
};

// max(1, round(rate * length))
std::size_t token_mask_count(std::size_t length, double rate);

TokenMaskPlan sample_token_mask(Modality modality, std::size_t length, double rate,
                                std::mt19937_64& rng);

struct MaskedText {
  std::vector<int> corrupted;
  std::vector<int> targets;  // original ids at plan.masked, in plan order
};
MaskedText apply_text_mask(std::span<const int> ids, const TokenMaskPlan& plan, int mask_id);
std::vector<int> reconstruct_text(std::span<const int> corrupted, std::span<const int> targets,
                                  const TokenMaskPlan& plan);

struct MaskedFeatures {
  FeatureMatrix corrupted;  // masked rows zeroed
  FeatureMatrix targets;    // original rows at plan.masked, in plan order
};
MaskedFeatures apply_feature_mask(const FeatureMatrix& features, const TokenMaskPlan& plan);

// Independent Bernoulli(p) drop per modality, resampled while all three drop.
ModalityMaskPlan sample_modality_mask(double p, std::mt19937_64& rng);

// Flags say whether each modality belongs to the reference triplet.
// (1,1,1) -> case 1, (0,1,1) -> case 2, (1,1,0) -> case 3, (1,0,1) -> case 4,
// anything with at most one reference modality -> case 5.
int case_index(bool match_text, bool match_vision, bool match_audio);
MatchLabel case_label(bool match_text, bool match_vision, bool match_audio);

// Label of a triplet assembled from the given sources. The reference is the
// source shared by at least two modalities; with none shared, nothing matches.
MatchLabel label_from_sources(std::size_t text_source, std::size_t vision_source,
                              std::size_t audio_source);

// One plan per sample; cases drawn uniformly. Replacements always come from
// another sample, and the two replacements of case 5 come from different
// samples whenever the batch has at least three.
std::vector<CorruptionPlan> sample_corruption(std::size_t batch_size, std::mt19937_64& rng);

}  // namespace omnipt
