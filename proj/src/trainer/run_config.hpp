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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "codec/image_codec.hpp"
#include "data/batch.hpp"
#include "data/synth.hpp"
#include "decoders/decoder.hpp"
#include "encoder/model_config.hpp"
#include "losses/pretext_losses.hpp"

namespace omnipt {

// Flat dotted key=value settings. Every key must be known; values are kept as
// text so the whole configuration can be echoed verbatim.
class ConfigMap {
 public:
  // Defaults for every known key (the desk preset).
  ConfigMap();

  // Lines "key = value"; '#' starts a comment. Unknown keys are rejected.
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin);
  // "key=value". A key without a dot may name any unique key by its last
  // component, e.g. "max_steps" for "train.max_steps".
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;
  std::string text(const std::string& key) const { return raw(key); }
  long long integer(const std::string& key) const;
  // Accepts decimals and fractions "a/b".
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  // Sorted key = value lines.
  std::string render() const;

 private:
  std::string resolve(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

struct TrainOptions {
  double learning_rate = 1e-3;
  int warmup_steps = 100;
  int batch_size = 16;
  int max_steps = 2000;
  double clip_norm = 1.0;
  int checkpoint_every = 500;
  int eval_every = 200;
  int eval_samples = 256;
  int patience = 5;
  std::array<double, kTaskCount> task_probabilities{};
  LossWeights loss_weights;
  BatchOptions masking;
};

struct EvalOptions {
  int pool = 64;
  int probe_train = 512;
  int probe_epochs = 200;
  double probe_lr = 0.05;
  int wer_samples = 64;
  int caption_samples = 64;
  std::uint64_t seed = 0;
};

// Fully typed view of a ConfigMap.
struct RunConfig {
  std::string name = "desk";
  std::filesystem::path run_root = "runs";
  std::uint64_t seed = 1;
  DType precision = DType::kF32;

  std::filesystem::path data_root = "data/desk";
  std::size_t train_count = 2048;
  std::size_t heldout_count = 256;
  SynthConfig synth;

  ModelConfig model;
  CodecConfig codec;
  std::filesystem::path codec_path;
  int codec_epochs = 30;
  int codec_images = 256;

  TrainOptions train;
  EvalOptions eval;
  GenerationParams generation;

  std::filesystem::path run_dir() const { return run_root / name; }
  ConfigMap source;

  static RunConfig from(const ConfigMap& map);
};

}  // namespace omnipt
