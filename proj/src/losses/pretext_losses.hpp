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
#include <optional>
#include <random>
#include <span>
#include <string>

#include "encoder/cross_encoder.hpp"

namespace omnipt {

// FC heads on top of the cross-modal encoder, one per objective.
template <typename T>
struct TaskHeads {
  Tensor<T> mlm_w, mlm_b;    // d_h -> vocab
  Tensor<T> mvfr_w, mvfr_b;  // d_h -> d_v
  Tensor<T> mrc_w, mrc_b;    // d_h -> n_classes
  Tensor<T> mafr_w, mafr_b;  // d_h -> d_a
  Tensor<T> mam_w, mam_b;    // d_h -> d_a, contrastive projection
  Tensor<T> sm_w, sm_b;      // d_h -> 5

  static TaskHeads create(ParameterSet<T>& params, const ModelConfig& config,
                          std::mt19937_64& rng);
};

// Mean over rows of -log softmax(logits)[target].
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets);

// Mean over rows of the squared L2 distance to the matching target row.
template <typename T>
Tensor<T> mean_squared_rows(const Tensor<T>& predictions, const FeatureMatrix& targets);

// For each prediction row m, -log(e^{cos(p_m, o_{pos_m})} / sum_j e^{cos(p_m, o_j)})
// over all rows o_j of `originals`, averaged over m. No temperature.
template <typename T>
Tensor<T> cosine_info_nce(const Tensor<T>& predictions, const FeatureMatrix& originals,
                          std::span<const std::size_t> positives);

// Encoder rows of one modality span at the given in-span positions.
template <typename T>
Tensor<T> span_rows(const Tensor<T>& encoded, const SequenceSpan& span,
                    std::span<const std::size_t> positions);

template <typename T>
Tensor<T> mlm_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                   const TokenMaskPlan& plan, std::span<const int> targets,
                   const TaskHeads<T>& heads);

template <typename T>
Tensor<T> mvfr_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                    const TokenMaskPlan& plan, const FeatureMatrix& target_rows,
                    const TaskHeads<T>& heads);

// pseudo_labels holds one label per region; the masked ones are the targets.
template <typename T>
Tensor<T> mrc_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                   const TokenMaskPlan& plan, std::span<const int> pseudo_labels,
                   const TaskHeads<T>& heads);

template <typename T>
Tensor<T> mafr_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                    const TokenMaskPlan& plan, const FeatureMatrix& target_rows,
                    const TaskHeads<T>& heads);

// `originals` are the uncorrupted audio frames of the sample (valid rows only).
// Returns nullopt when there is no unmasked frame to contrast against.
template <typename T>
std::optional<Tensor<T>> mam_nce_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                                      const TokenMaskPlan& plan, const FeatureMatrix& originals,
                                      const TaskHeads<T>& heads);

// Matching scores s = sigmoid(FC(cls)); loss = mean BCE over the 5 slots.
template <typename T>
Tensor<T> match_scores(const Tensor<T>& cls, const TaskHeads<T>& heads);
template <typename T>
Tensor<T> sm_loss(const Tensor<T>& cls, const MatchLabel& label, const TaskHeads<T>& heads);

enum class LossTerm : std::size_t { kMlm, kMvfr, kMrc, kMafr, kMamNce, kDtr, kDir, kSm };
inline constexpr std::size_t kLossTermCount = 8;
const char* loss_term_name(LossTerm term);

struct LossWeights {
  std::array<double, kLossTermCount> values{1, 1, 1, 1, 1, 1, 1, 1};
  double& operator[](LossTerm t) { return values[static_cast<std::size_t>(t)]; }
  double operator[](LossTerm t) const { return values[static_cast<std::size_t>(t)]; }
};

template <typename T>
using LossParts = std::array<Tensor<T>, kLossTermCount>;  // undefined = inactive

template <typename T>
struct LossBundle {
  LossParts<T> terms;
  LossWeights weights;
  Tensor<T> total;
  std::string warning;

  bool active(LossTerm t) const { return terms[static_cast<std::size_t>(t)].defined(); }
  double value(LossTerm t) const { return terms[static_cast<std::size_t>(t)].item(); }
};

// total = sum of weight * loss over active terms.
template <typename T>
LossBundle<T> aggregate(const LossParts<T>& parts, const LossWeights& weights);

}  // namespace omnipt
