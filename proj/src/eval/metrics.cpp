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

#include "eval/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"

namespace omnipt {

std::size_t gold_rank(std::span<const double> scores, std::size_t gold) {
  if (gold >= scores.size()) throw ValidationError("gold index outside the candidate pool");
  const double g = scores[gold];
  std::size_t rank = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > g || (scores[j] == g && j < gold)) ++rank;
  }
  return rank;
}

double recall_at_k(const std::vector<std::vector<double>>& scores, std::span<const std::size_t> gold,
                   std::size_t k) {
  if (scores.empty() || scores.size() != gold.size()) {
    throw ValidationError("recall_at_k: need one gold index per query");
  }
  std::size_t hits = 0;
  for (std::size_t q = 0; q < scores.size(); ++q) {
    if (k == 0 || k > scores[q].size()) {
      throw ValidationError("recall_at_k: K=" + std::to_string(k) + " outside [1, pool=" +
                            std::to_string(scores[q].size()) + "]");
    }
    if (gold_rank(scores[q], gold[q]) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ValidationError("average_precision: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t positives = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]]) {
      ++positives;
      sum += static_cast<double>(positives) / static_cast<double>(r + 1);
    }
  }
  if (positives == 0) return std::nullopt;
  return sum / static_cast<double>(positives);
}

MapResult mean_average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 std::size_t classes) {
  if (classes == 0 || scores.size() != labels.size() || scores.size() % classes != 0) {
    throw ValidationError("mean_average_precision: scores and labels must be samples x classes");
  }
  const std::size_t n = scores.size() / classes;
  MapResult out;
  double sum = 0.0;
  std::vector<double> col(n);
  std::vector<std::uint8_t> lab(n);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = scores[i * classes + c];
      lab[i] = labels[i * classes + c];
    }
    if (auto ap = average_precision(col, lab)) {
      sum += *ap;
      ++out.classes_used;
    } else {
      out.skipped.push_back(c);
    }
  }
  if (out.classes_used == 0) throw ValidationError("mean_average_precision: no class has a positive");
  out.mean = sum / static_cast<double>(out.classes_used);
  return out;
}

std::size_t edit_distance(std::span<const std::string> hyp, std::span<const std::string> ref) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

double wer(std::span<const std::string> hyp, std::span<const std::string> ref) {
  if (ref.empty()) throw ValidationError("wer: empty reference");
  return static_cast<double>(edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

}  // namespace omnipt
