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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "codec/image_codec.hpp"
#include "data/synth.hpp"
#include "masking/masking.hpp"

namespace omnipt {

enum class Task : int { kMlm = 0, kMvm, kMam, kDtr, kDir, kSm };
inline constexpr std::size_t kTaskCount = 6;
const char* task_name(Task task);
Task parse_task(const std::string& name);

struct BatchOptions {
  double token_mask_rate = kDefaultTokenMaskRate;
  double modality_drop_rate = kDefaultModalityDropRate;
  // DIR steps additionally drop the image with this probability.
  double dir_image_drop = 0.5;
};

// One input triplet padded to the batch's per-modality lengths. Padding rows
// are zeros (features) or [PAD] (text) and carry mask value 0.
struct BatchSample {
  std::size_t record = 0;  // index into the record list
  std::vector<int> text;
  std::size_t text_valid = 0;
  FeatureMatrix regions;
  FeatureMatrix locations;
  std::size_t region_valid = 0;
  FeatureMatrix audio;
  std::size_t audio_valid = 0;

  std::vector<std::uint8_t> text_mask() const;
  std::vector<std::uint8_t> region_mask() const;
  std::vector<std::uint8_t> audio_mask() const;
};

// Inputs plus exactly one task's corruption plans and targets.
struct Batch {
  Task task = Task::kMlm;
  std::size_t text_len = 0, region_len = 0, audio_len = 0;
  std::vector<BatchSample> samples;

  // MLM / MVM / MAM: one plan per sample over the task's modality.
  std::vector<TokenMaskPlan> token_plans;
  std::vector<std::vector<int>> text_targets;          // MLM
  std::vector<FeatureMatrix> feature_targets;          // MVM, MAM
  std::vector<std::vector<int>> region_labels;         // MVM, valid rows only
  std::vector<FeatureMatrix> audio_originals;          // MAM, valid rows only
  // DTR / DIR.
  std::vector<ModalityMaskPlan> modality_plans;
  std::vector<std::vector<int>> caption_targets;       // DTR
  std::vector<std::vector<int>> code_targets;          // DIR
  // SM.
  std::vector<CorruptionPlan> corruption;

  std::size_t size() const { return samples.size(); }
  // Throws ContractError unless only the task's own plans are attached.
  void check_consistent() const;
};

// `codes` (aligned with `records`) is required for DIR batches.
Batch make_batch(std::span<const TripletRecord> records, std::span<const std::size_t> indices,
                 Task task, const BatchOptions& options, std::mt19937_64& rng,
                 std::span<const CodeGrid> codes = {});

// DIR modality plan: the regular plan with the image additionally dropped
// with probability `image_drop`; redrawn whenever everything ends up dropped.
ModalityMaskPlan sample_dir_modality_mask(double p, double image_drop, std::mt19937_64& rng);

}  // namespace omnipt
