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

#include "masking/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"

namespace omnipt {

bool ModalityMaskPlan::drops(Modality m) const {
  switch (m) {
    case Modality::kText:
      return drop_text;
    case Modality::kVision:
      return drop_vision;
    case Modality::kAudio:
      return drop_audio;
  }
  return false;
}

std::size_t token_mask_count(std::size_t length, double rate) {
  const auto rounded = static_cast<std::size_t>(std::llround(rate * static_cast<double>(length)));
  return std::min(length, std::max<std::size_t>(1, rounded));
}

TokenMaskPlan sample_token_mask(Modality modality, std::size_t length, double rate,
                                std::mt19937_64& rng) {
  if (length == 0) throw ValidationError("sample_token_mask: length must be at least 1");
  if (!(rate > 0.0 && rate < 1.0)) throw ValidationError("sample_token_mask: rate must be in (0, 1)");
  const std::size_t count = token_mask_count(length, rate);
  std::vector<std::size_t> pool(length);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, length - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return {modality, length, rate, std::move(pool)};
}

MaskedText apply_text_mask(std::span<const int> ids, const TokenMaskPlan& plan, int mask_id) {
  if (plan.modality != Modality::kText) throw ContractError("apply_text_mask: plan is not a text plan");
  MaskedText out;
  out.corrupted.assign(ids.begin(), ids.end());
  for (auto i : plan.masked) {
    if (i >= ids.size()) throw ContractError("apply_text_mask: index beyond sequence");
    out.targets.push_back(ids[i]);
    out.corrupted[i] = mask_id;
  }
  return out;
}

std::vector<int> reconstruct_text(std::span<const int> corrupted, std::span<const int> targets,
                                  const TokenMaskPlan& plan) {
  if (targets.size() != plan.masked.size()) {
    throw ContractError("reconstruct_text: target count does not match plan");
  }
  std::vector<int> out(corrupted.begin(), corrupted.end());
  for (std::size_t k = 0; k < plan.masked.size(); ++k) out[plan.masked[k]] = targets[k];
  return out;
}

MaskedFeatures apply_feature_mask(const FeatureMatrix& features, const TokenMaskPlan& plan) {
  if (plan.modality == Modality::kText) {
    throw ContractError("apply_feature_mask: plan is a text plan");
  }
  MaskedFeatures out;
  out.corrupted = features;
  out.targets = FeatureMatrix(plan.masked.size(), features.cols);
  for (std::size_t k = 0; k < plan.masked.size(); ++k) {
    const auto i = plan.masked[k];
    if (i >= features.rows) throw ContractError("apply_feature_mask: index beyond sequence");
    std::copy(features.row(i).begin(), features.row(i).end(), out.targets.row(k).begin());
    std::fill(out.corrupted.row(i).begin(), out.corrupted.row(i).end(), 0.0f);
  }
  return out;
}

ModalityMaskPlan sample_modality_mask(double p, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("sample_modality_mask: p must be in [0, 1)");
  std::bernoulli_distribution drop(p);
  ModalityMaskPlan plan;
  do {
    plan.drop_text = drop(rng);
    plan.drop_vision = drop(rng);
    plan.drop_audio = drop(rng);
  } while (plan.all_dropped());
  return plan;
}

int case_index(bool match_text, bool match_vision, bool match_audio) {
  if (match_text && match_vision && match_audio) return 0;
  if (!match_text && match_vision && match_audio) return 1;
  if (match_text && match_vision && !match_audio) return 2;
  if (match_text && !match_vision && match_audio) return 3;
  return 4;
}

MatchLabel case_label(bool match_text, bool match_vision, bool match_audio) {
  MatchLabel label{};
  label[static_cast<std::size_t>(case_index(match_text, match_vision, match_audio))] = 1.0f;
  return label;
}

MatchLabel label_from_sources(std::size_t text_source, std::size_t vision_source,
                              std::size_t audio_source) {
  std::size_t reference;
  if (vision_source == audio_source || text_source == vision_source) {
    reference = vision_source;
  } else if (text_source == audio_source) {
    reference = text_source;
  } else {
    return case_label(false, false, false);
  }
  return case_label(text_source == reference, vision_source == reference,
                    audio_source == reference);
}

std::vector<CorruptionPlan> sample_corruption(std::size_t batch_size, std::mt19937_64& rng) {
  if (batch_size < 2) {
    throw ValidationError("sample_corruption: batch size must be at least 2");
  }
  std::uniform_int_distribution<int> pick_case(0, kMatchCases - 1);
  std::uniform_int_distribution<int> pick_pair(0, 2);
  auto other_than = [&](std::size_t self, std::size_t avoid) {
    // uniform over indices != self (and != avoid when avoid != self)
    const std::size_t excluded = (avoid != self) ? 2 : 1;
    std::uniform_int_distribution<std::size_t> d(0, batch_size - 1 - excluded);
    std::size_t r = d(rng);
    const std::size_t lo = std::min(self, avoid);
    const std::size_t hi = std::max(self, avoid);
    if (r >= lo) ++r;
    if (excluded == 2 && r >= hi) ++r;
    return r;
  };

  std::vector<CorruptionPlan> plans(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    auto& plan = plans[i];
    plan.text_source = plan.vision_source = plan.audio_source = i;
    switch (pick_case(rng)) {
      case 0:
        break;
      case 1:
        plan.replace_text = true;
        plan.text_source = other_than(i, i);
        break;
      case 2:
        plan.replace_audio = true;
        plan.audio_source = other_than(i, i);
        break;
      case 3:
        plan.replace_vision = true;
        plan.vision_source = other_than(i, i);
        break;
      default: {
        const int pair = pick_pair(rng);
        const std::size_t first = other_than(i, i);
        const std::size_t second = batch_size >= 3 ? other_than(i, first) : first;
        if (pair == 0) {
          plan.replace_text = plan.replace_vision = true;
          plan.text_source = first;
          plan.vision_source = second;
        } else if (pair == 1) {
          plan.replace_text = plan.replace_audio = true;
          plan.text_source = first;
          plan.audio_source = second;
        } else {
          plan.replace_vision = plan.replace_audio = true;
          plan.vision_source = first;
          plan.audio_source = second;
        }
        break;
      }
    }
    plan.label = label_from_sources(plan.text_source, plan.vision_source, plan.audio_source);
    plan.case_index = static_cast<int>(
        std::max_element(plan.label.begin(), plan.label.end()) - plan.label.begin());
  }
  return plans;
}

}  // namespace omnipt
