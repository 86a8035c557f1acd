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

#include "losses/pretext_losses.hpp"

namespace omnipt {

template <typename T>
TaskHeads<T> TaskHeads<T>::create(ParameterSet<T>& params, const ModelConfig& config,
                                  std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  auto fc = [&](const std::string& name, std::size_t out, Tensor<T>& w, Tensor<T>& b) {
    w = params.add_normal("heads." + name + ".w", {d, out}, rng);
    b = params.add_zeros("heads." + name + ".b", {out});
  };
  TaskHeads h;
  fc("mlm", static_cast<std::size_t>(config.vocab_size), h.mlm_w, h.mlm_b);
  fc("mvfr", static_cast<std::size_t>(config.d_v), h.mvfr_w, h.mvfr_b);
  fc("mrc", static_cast<std::size_t>(config.n_classes), h.mrc_w, h.mrc_b);
  fc("mafr", static_cast<std::size_t>(config.d_a), h.mafr_w, h.mafr_b);
  fc("mam", static_cast<std::size_t>(config.d_a), h.mam_w, h.mam_b);
  fc("sm", static_cast<std::size_t>(kMatchCases), h.sm_w, h.sm_b);
  return h;
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets) {
  if (targets.empty()) throw ContractError("cross_entropy: empty target set");
  if (targets.size() != logits.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         shape_str(logits.shape()));
  }
  std::vector<std::size_t> index(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= logits.cols()) {
      throw ValidationError("cross_entropy: target " + std::to_string(targets[i]) +
                            " outside " + std::to_string(logits.cols()) + " classes");
    }
    index[i] = static_cast<std::size_t>(targets[i]);
  }
  return scale(mean(pick(log_softmax(logits), std::span<const std::size_t>(index))), T{-1});
}

template <typename T>
Tensor<T> mean_squared_rows(const Tensor<T>& predictions, const FeatureMatrix& targets) {
  if (predictions.rows() != targets.rows || predictions.cols() != targets.cols) {
    throw DimensionError("mean_squared_rows: prediction " + shape_str(predictions.shape()) +
                         " vs target [" + std::to_string(targets.rows) + "x" +
                         std::to_string(targets.cols) + "]");
  }
  const auto diff = sub(predictions, to_tensor<T>(targets));
  return scale(sum_squares(diff), T{1} / static_cast<T>(targets.rows));
}

template <typename T>
Tensor<T> cosine_info_nce(const Tensor<T>& predictions, const FeatureMatrix& originals,
                          std::span<const std::size_t> positives) {
  if (positives.size() != predictions.rows()) {
    throw DimensionError("cosine_info_nce: one positive per prediction row required");
  }
  const auto sims = matmul_nt(l2_normalize_rows(predictions, 1e-8),
                              l2_normalize_rows(to_tensor<T>(originals), 1e-8));
  return scale(mean(pick(log_softmax(sims), positives)), T{-1});
}

template <typename T>
Tensor<T> span_rows(const Tensor<T>& encoded, const SequenceSpan& span,
                    std::span<const std::size_t> positions) {
  if (span.empty()) throw ContractError("span_rows: modality is not present in the sequence");
  std::vector<std::size_t> rows(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= span.length) throw ContractError("span_rows: position beyond span");
    rows[i] = span.offset + positions[i];
  }
  return gather_rows(encoded, std::span<const std::size_t>(rows));
}

template <typename T>
Tensor<T> mlm_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                   const TokenMaskPlan& plan, std::span<const int> targets,
                   const TaskHeads<T>& heads) {
  if (targets.size() != plan.masked.size()) {
    throw ContractError("mlm_loss: target count differs from mask count");
  }
  const auto rows = span_rows(encoded, sequence.text, plan.masked);
  return cross_entropy(linear(rows, heads.mlm_w, heads.mlm_b), targets);
}

template <typename T>
Tensor<T> mvfr_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                    const TokenMaskPlan& plan, const FeatureMatrix& target_rows,
                    const TaskHeads<T>& heads) {
  const auto rows = span_rows(encoded, sequence.vision, plan.masked);
  return mean_squared_rows(linear(rows, heads.mvfr_w, heads.mvfr_b), target_rows);
}

template <typename T>
Tensor<T> mrc_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                   const TokenMaskPlan& plan, std::span<const int> pseudo_labels,
                   const TaskHeads<T>& heads) {
  const auto n_classes = static_cast<int>(heads.mrc_w.cols());
  std::vector<int> targets;
  for (auto i : plan.masked) {
    if (i >= pseudo_labels.size()) throw ContractError("mrc_loss: masked region without label");
    const int label = pseudo_labels[i];
    if (label < 0 || label >= n_classes) {
      throw ValidationError("mrc_loss: label " + std::to_string(label) + " >= n_classes " +
                            std::to_string(n_classes));
    }
    targets.push_back(label);
  }
  const auto rows = span_rows(encoded, sequence.vision, plan.masked);
  return cross_entropy(linear(rows, heads.mrc_w, heads.mrc_b), std::span<const int>(targets));
}

template <typename T>
Tensor<T> mafr_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                    const TokenMaskPlan& plan, const FeatureMatrix& target_rows,
                    const TaskHeads<T>& heads) {
  const auto rows = span_rows(encoded, sequence.audio, plan.masked);
  return mean_squared_rows(linear(rows, heads.mafr_w, heads.mafr_b), target_rows);
}

template <typename T>
std::optional<Tensor<T>> mam_nce_loss(const Tensor<T>& encoded, const JointSequence<T>& sequence,
                                      const TokenMaskPlan& plan, const FeatureMatrix& originals,
                                      const TaskHeads<T>& heads) {
  if (plan.masked.empty() || plan.masked.size() >= originals.rows) return std::nullopt;
  const auto rows = span_rows(encoded, sequence.audio, plan.masked);
  return cosine_info_nce(linear(rows, heads.mam_w, heads.mam_b), originals, plan.masked);
}

template <typename T>
Tensor<T> match_scores(const Tensor<T>& cls, const TaskHeads<T>& heads) {
  return sigmoid(linear(cls, heads.sm_w, heads.sm_b));
}

template <typename T>
Tensor<T> sm_loss(const Tensor<T>& cls, const MatchLabel& label, const TaskHeads<T>& heads) {
  std::array<T, kMatchCases> targets{};
  for (std::size_t k = 0; k < kMatchCases; ++k) targets[k] = static_cast<T>(label[k]);
  return binary_cross_entropy(match_scores(cls, heads), std::span<const T>(targets));
}

const char* loss_term_name(LossTerm term) {
  switch (term) {
    case LossTerm::kMlm:
      return "mlm";
    case LossTerm::kMvfr:
      return "mvfr";
    case LossTerm::kMrc:
      return "mrc";
    case LossTerm::kMafr:
      return "mafr";
    case LossTerm::kMamNce:
      return "mam_nce";
    case LossTerm::kDtr:
      return "dtr";
    case LossTerm::kDir:
      return "dir";
    case LossTerm::kSm:
      return "sm";
  }
  return "?";
}

template <typename T>
LossBundle<T> aggregate(const LossParts<T>& parts, const LossWeights& weights) {
  LossBundle<T> bundle;
  bundle.terms = parts;
  bundle.weights = weights;
  Tensor<T> total;
  bool any_weight = false;
  for (std::size_t i = 0; i < kLossTermCount; ++i) {
    if (weights.values[i] < 0.0) throw ValidationError("aggregate: negative loss weight");
    if (!parts[i].defined()) continue;
    if (parts[i].numel() != 1) throw ContractError("aggregate: loss terms must be scalars");
    if (weights.values[i] == 0.0) continue;
    any_weight = true;
    const auto weighted = scale(parts[i], static_cast<T>(weights.values[i]));
    total = total.defined() ? add(total, weighted) : weighted;
  }
  if (!any_weight) {
    bundle.warning = "no active loss term carries a nonzero weight";
    total = Tensor<T>::scalar(T{0});
  }
  bundle.total = total;
  return bundle;
}

#define OMNIPT_INSTANTIATE_LOSSES(T)                                                         \
  template struct TaskHeads<T>;                                                              \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);                  \
  template Tensor<T> mean_squared_rows(const Tensor<T>&, const FeatureMatrix&);              \
  template Tensor<T> cosine_info_nce(const Tensor<T>&, const FeatureMatrix&,                 \
                                     std::span<const std::size_t>);                          \
  template Tensor<T> span_rows(const Tensor<T>&, const SequenceSpan&,                        \
                               std::span<const std::size_t>);                                \
  template Tensor<T> mlm_loss(const Tensor<T>&, const JointSequence<T>&,                     \
                              const TokenMaskPlan&, std::span<const int>,                    \
                              const TaskHeads<T>&);                                          \
  template Tensor<T> mvfr_loss(const Tensor<T>&, const JointSequence<T>&,                    \
                               const TokenMaskPlan&, const FeatureMatrix&,                   \
                               const TaskHeads<T>&);                                         \
  template Tensor<T> mrc_loss(const Tensor<T>&, const JointSequence<T>&,                     \
                              const TokenMaskPlan&, std::span<const int>,                    \
                              const TaskHeads<T>&);                                          \
  template Tensor<T> mafr_loss(const Tensor<T>&, const JointSequence<T>&,                    \
                               const TokenMaskPlan&, const FeatureMatrix&,                   \
                               const TaskHeads<T>&);                                         \
  template std::optional<Tensor<T>> mam_nce_loss(const Tensor<T>&, const JointSequence<T>&,  \
                                                 const TokenMaskPlan&, const FeatureMatrix&, \
                                                 const TaskHeads<T>&);                       \
  template Tensor<T> match_scores(const Tensor<T>&, const TaskHeads<T>&);                    \
  template Tensor<T> sm_loss(const Tensor<T>&, const MatchLabel&, const TaskHeads<T>&);      \
  template LossBundle<T> aggregate(const LossParts<T>&, const LossWeights&);

OMNIPT_INSTANTIATE_LOSSES(float)
OMNIPT_INSTANTIATE_LOSSES(double)

}  // namespace omnipt
