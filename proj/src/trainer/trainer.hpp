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
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "model/opt_model.hpp"
#include "numerics/adam.hpp"
#include "trainer/run_config.hpp"

namespace omnipt {

struct StepRecord {
  int step = 0;
  Task task = Task::kMlm;
  std::array<std::optional<double>, kLossTermCount> terms{};
  double total = 0.0;
  double grad_norm = 0.0;
  double learning_rate = 0.0;
  std::optional<double> heldout;
};

// "step=3 task=mlm total=... mlm=... grad_norm=... lr=..." with every value
// printed to 17 significant digits.
std::string format_step(const StepRecord& record);

struct EarlyStopState {
  double best = 0.0;
  bool has_best = false;
  int bad_evaluations = 0;
  bool stopped = false;
};

// Linear warmup to base over `warmup` steps (1-based), then constant.
double scheduled_learning_rate(double base, int warmup, int step);

// Training state for one run. Codes are the frozen codec's targets for the
// train records (needed only when DIR can be drawn).
template <typename T>
class Trainer {
 public:
  Trainer(RunConfig config, std::vector<TripletRecord> train, std::vector<TripletRecord> heldout,
          std::vector<CodeGrid> train_codes, std::vector<CodeGrid> heldout_codes);

  StepRecord step();
  // Held-out total loss: every task on the first train.eval_samples held-out
  // records with a fixed corruption stream, eval mode, averaged over tasks.
  double heldout_loss() const;
  // Records the evaluation; returns true when patience is exhausted.
  bool update_early_stop(double heldout);

  void save_checkpoint(const std::filesystem::path& path) const;
  // Restores parameters, optimizer, RNG streams, step and early-stop state.
  void load_checkpoint(const std::filesystem::path& path);

  Task draw_task();
  int current_step() const { return step_; }
  const EarlyStopState& early_stop() const { return early_; }
  OptModel<T>& model() { return model_; }
  const OptModel<T>& model() const { return model_; }
  const RunConfig& config() const { return config_; }
  // Invoked with the step number and batch when a loss turns non-finite.
  std::function<void(int, const Batch&)> on_non_finite;

 private:
  RunConfig config_;
  std::vector<TripletRecord> train_, heldout_;
  std::vector<CodeGrid> train_codes_, heldout_codes_;
  OptModel<T> model_;
  AdamState<T> adam_;
  std::mt19937_64 data_rng_;
  std::mt19937_64 dropout_rng_;
  int step_ = 0;
  EarlyStopState early_;
};

struct PretrainResult {
  int steps = 0;
  bool stopped_early = false;
  std::optional<double> last_heldout;
  std::filesystem::path final_checkpoint;
};

struct PretrainOptions {
  // Continue from this checkpoint instead of a fresh initialization.
  std::optional<std::filesystem::path> resume_from;
  // Called after every step with the logged record.
  std::function<void(const StepRecord&)> on_step;
};

// Loads the dataset and frozen codec named by the config, trains, and writes
// runs/<name>/{config.cfg, metrics.log, ckpt-<step>.bin, ckpt-final.bin}.
template <typename T>
PretrainResult pretrain(const RunConfig& config, const PretrainOptions& options = {});

// Vocabulary size of the dataset's vocab file merged into the model config.
ModelConfig model_config_for(const RunConfig& config);

// Echo of a run configuration stored in checkpoints.
ConfigMap config_from_checkpoint(const Archive& archive);

// A trained model rebuilt from a checkpoint (optimizer state ignored).
template <typename T>
OptModel<T> load_model(const std::filesystem::path& path, RunConfig* config_out = nullptr);

// Frozen-codec codes for every record.
template <typename T>
std::vector<CodeGrid> encode_records(const ImageCodec<T>& codec, const std::vector<TripletRecord>& records);

// FNV-1a hash over the bytes of every parameter value, in registration order.
template <typename T>
std::uint64_t parameter_checksum(const ParameterSet<T>& params);

}  // namespace omnipt
