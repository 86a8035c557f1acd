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

#include "data/batch.hpp"

#include <algorithm>

namespace omnipt {

namespace {

constexpr std::array<const char*, kTaskCount> kTaskNames = {"mlm", "mvm", "mam", "dtr", "dir", "sm"};

std::vector<std::uint8_t> prefix_mask(std::size_t length, std::size_t valid) {
  std::vector<std::uint8_t> m(length, 0);
  std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(valid), 1);
  return m;
}

FeatureMatrix pad_rows(const FeatureMatrix& m, std::size_t rows) {
  FeatureMatrix out(rows, m.cols);
  std::copy(m.values.begin(), m.values.end(), out.values.begin());
  return out;
}

FeatureMatrix valid_rows(const FeatureMatrix& m, std::size_t rows) {
  FeatureMatrix out(rows, m.cols);
  std::copy(m.values.begin(), m.values.begin() + static_cast<std::ptrdiff_t>(rows * m.cols),
            out.values.begin());
  return out;
}

}  // namespace

const char* task_name(Task task) { return kTaskNames.at(static_cast<std::size_t>(task)); }

Task parse_task(const std::string& name) {
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (name == kTaskNames[i]) return static_cast<Task>(i);
  }
  throw ValidationError("unknown task '" + name + "'");
}

std::vector<std::uint8_t> BatchSample::text_mask() const { return prefix_mask(text.size(), text_valid); }
std::vector<std::uint8_t> BatchSample::region_mask() const {
  return prefix_mask(regions.rows, region_valid);
}
std::vector<std::uint8_t> BatchSample::audio_mask() const { return prefix_mask(audio.rows, audio_valid); }

void Batch::check_consistent() const {
  const bool token = task == Task::kMlm || task == Task::kMvm || task == Task::kMam;
  const bool modality = task == Task::kDtr || task == Task::kDir;
  auto expect = [&](bool wanted, std::size_t count, const char* what) {
    if (wanted ? count != samples.size() : count != 0) {
      throw ContractError(std::string("batch for task ") + task_name(task) + " has " +
                          std::to_string(count) + " " + what + " for " +
                          std::to_string(samples.size()) + " samples");
    }
  };
  expect(token, token_plans.size(), "token mask plans");
  expect(task == Task::kMlm, text_targets.size(), "text targets");
  expect(task == Task::kMvm || task == Task::kMam, feature_targets.size(), "feature targets");
  expect(task == Task::kMvm, region_labels.size(), "region label sets");
  expect(task == Task::kMam, audio_originals.size(), "audio originals");
  expect(modality, modality_plans.size(), "modality plans");
  expect(task == Task::kDtr, caption_targets.size(), "caption targets");
  expect(task == Task::kDir, code_targets.size(), "code targets");
  expect(task == Task::kSm, corruption.size(), "corruption plans");
  for (std::size_t i = 0; i < token_plans.size(); ++i) {
    const Modality want = task == Task::kMlm ? Modality::kText
                          : task == Task::kMvm ? Modality::kVision
                                               : Modality::kAudio;
    if (token_plans[i].modality != want) throw ContractError("token plan on the wrong modality");
  }
}

ModalityMaskPlan sample_dir_modality_mask(double p, double image_drop, std::mt19937_64& rng) {
  if (image_drop < 0.0 || image_drop > 1.0) throw ValidationError("dir image drop must be in [0, 1]");
  std::bernoulli_distribution drop_image(image_drop);
  while (true) {
    auto plan = sample_modality_mask(p, rng);
    if (drop_image(rng)) plan.drop_vision = true;
    if (!plan.all_dropped()) return plan;
  }
}

Batch make_batch(std::span<const TripletRecord> records, std::span<const std::size_t> indices,
                 Task task, const BatchOptions& options, std::mt19937_64& rng,
                 std::span<const CodeGrid> codes) {
  if (indices.empty()) throw ValidationError("make_batch: empty batch");
  if (task == Task::kSm && indices.size() < 2) {
    throw ValidationError("make_batch: SM needs a batch of at least 2 samples");
  }
  if (task == Task::kDir && codes.size() != records.size()) {
    throw ValidationError("make_batch: DIR needs one code grid per record");
  }
  for (auto i : indices) {
    if (i >= records.size()) throw ValidationError("make_batch: record index out of range");
  }

  Batch batch;
  batch.task = task;
  if (task == Task::kSm) batch.corruption = sample_corruption(indices.size(), rng);

  // Each sample's modalities come from its own record except under SM corruption.
  struct Sources {
    const TripletRecord* text;
    const TripletRecord* vision;
    const TripletRecord* audio;
  };
  std::vector<Sources> sources;
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const auto* own = &records[indices[s]];
    Sources src{own, own, own};
    if (task == Task::kSm) {
      const auto& plan = batch.corruption[s];
      src.text = &records[indices[plan.text_source]];
      src.vision = &records[indices[plan.vision_source]];
      src.audio = &records[indices[plan.audio_source]];
    }
    batch.text_len = std::max(batch.text_len, src.text->token_ids.size());
    batch.region_len = std::max(batch.region_len, src.vision->regions.count());
    batch.audio_len = std::max(batch.audio_len, src.audio->audio.count());
    sources.push_back(src);
  }

  for (std::size_t s = 0; s < indices.size(); ++s) {
    const auto& src = sources[s];
    BatchSample sample;
    sample.record = indices[s];
    sample.text = src.text->token_ids;
    sample.text_valid = sample.text.size();
    sample.text.resize(batch.text_len, Vocabulary::kPad);
    sample.region_valid = src.vision->regions.count();
    sample.regions = pad_rows(src.vision->regions.features, batch.region_len);
    sample.locations = pad_rows(src.vision->regions.locations, batch.region_len);
    sample.audio_valid = src.audio->audio.count();
    sample.audio = pad_rows(src.audio->audio.features, batch.audio_len);
    if (sample.text_valid == 0 || sample.region_valid == 0 || sample.audio_valid == 0) {
      throw ValidationError("make_batch: record " + std::to_string(src.text->record_id) +
                            " has an empty modality");
    }

    switch (task) {
      case Task::kMlm: {
        auto plan = sample_token_mask(Modality::kText, sample.text_valid, options.token_mask_rate, rng);
        auto masked = apply_text_mask(std::span<const int>(sample.text.data(), sample.text_valid), plan,
                                      Vocabulary::kMask);
        std::copy(masked.corrupted.begin(), masked.corrupted.end(), sample.text.begin());
        batch.text_targets.push_back(std::move(masked.targets));
        batch.token_plans.push_back(std::move(plan));
        break;
      }
      case Task::kMvm: {
        auto plan = sample_token_mask(Modality::kVision, sample.region_valid, options.token_mask_rate, rng);
        const auto original = valid_rows(sample.regions, sample.region_valid);
        auto masked = apply_feature_mask(original, plan);
        std::copy(masked.corrupted.values.begin(), masked.corrupted.values.end(),
                  sample.regions.values.begin());
        batch.feature_targets.push_back(std::move(masked.targets));
        batch.region_labels.push_back(src.vision->regions.pseudo_labels);
        batch.token_plans.push_back(std::move(plan));
        break;
      }
      case Task::kMam: {
        auto plan = sample_token_mask(Modality::kAudio, sample.audio_valid, options.token_mask_rate, rng);
        auto original = valid_rows(sample.audio, sample.audio_valid);
        auto masked = apply_feature_mask(original, plan);
        std::copy(masked.corrupted.values.begin(), masked.corrupted.values.end(),
                  sample.audio.values.begin());
        batch.feature_targets.push_back(std::move(masked.targets));
        batch.audio_originals.push_back(std::move(original));
        batch.token_plans.push_back(std::move(plan));
        break;
      }
      case Task::kDtr:
        batch.modality_plans.push_back(sample_modality_mask(options.modality_drop_rate, rng));
        batch.caption_targets.push_back(src.text->token_ids);
        break;
      case Task::kDir:
        batch.modality_plans.push_back(
            sample_dir_modality_mask(options.modality_drop_rate, options.dir_image_drop, rng));
        batch.code_targets.push_back(codes[indices[s]].ids);
        break;
      case Task::kSm:
        break;
    }
    batch.samples.push_back(std::move(sample));
  }
  batch.check_consistent();
  return batch;
}

}  // namespace omnipt
