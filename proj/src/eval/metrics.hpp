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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace omnipt {

// Scores are "higher is better". A candidate outranks the gold one when its
// score is greater, or equal with a smaller candidate index.
// Returns the 0-based position of the gold candidate.
std::size_t gold_rank(std::span<const double> scores, std::size_t gold);

// Fraction of queries whose gold candidate is among the top k.
double recall_at_k(const std::vector<std::vector<double>>& scores, std::span<const std::size_t> gold,
                   std::size_t k);

// All-point average precision: mean of precision@rank over the positives,
// ranking by score with ties broken by sample index. nullopt without positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MapResult {
  double mean = 0.0;
  std::size_t classes_used = 0;
  std::vector<std::size_t> skipped;  // classes with no held-out positive
};

// scores and labels are [samples x classes], row-major.
MapResult mean_average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 std::size_t classes);

// Word-level Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const std::string> hypothesis, std::span<const std::string> reference);
// edit_distance / |reference|; empty reference is a ValidationError.
double wer(std::span<const std::string> hypothesis, std::span<const std::string> reference);

}  // namespace omnipt
