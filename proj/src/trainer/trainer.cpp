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

#include "trainer/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "data/dataset.hpp"

namespace omnipt {

namespace {

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_exact(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError("checkpoint: bad value for '" + key + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError("checkpoint: bad integer for '" + key + "'");
}

std::string engine_state(const std::mt19937_64& engine) {
  std::ostringstream out;
  out << engine;
  return out.str();
}

void restore_engine(std::mt19937_64& engine, const std::string& state, const std::string& key) {
  std::istringstream in(state);
  in >> engine;
  if (!in) throw ParseError("checkpoint: bad RNG state '" + key + "'");
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> draw_indices(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  count = std::min(count, population);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

std::string format_step(const StepRecord& r) {
  std::string out = "step=" + std::to_string(r.step) + " task=" + task_name(r.task) + " total=" + number(r.total);
  for (std::size_t i = 0; i < kLossTermCount; ++i) {
    if (r.terms[i]) out += std::string(" ") + loss_term_name(static_cast<LossTerm>(i)) + "=" + number(*r.terms[i]);
  }
  out += " grad_norm=" + number(r.grad_norm) + " lr=" + number(r.learning_rate);
  if (r.heldout) out += " heldout=" + number(*r.heldout);
  return out;
}

double scheduled_learning_rate(double base, int warmup, int step) {
  if (warmup <= 0 || step >= warmup) return base;
  return base * static_cast<double>(step) / static_cast<double>(warmup);
}

ModelConfig model_config_for(const RunConfig& config) {
  ModelConfig mc = config.model;
  mc.vocab_size = synth_vocabulary().size();
  const auto vocab_path = DatasetLayout{config.data_root}.vocab();
  if (std::filesystem::exists(vocab_path)) mc.vocab_size = Vocabulary::load(vocab_path).size();
  return mc;
}

template <typename T>
std::uint64_t parameter_checksum(const ParameterSet<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params.list()) {
    for (T v : p.tensor.data()) {
      unsigned char bytes[sizeof(T)];
      std::memcpy(bytes, &v, sizeof(T));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

template <typename T>
std::vector<CodeGrid> encode_records(const ImageCodec<T>& codec, const std::vector<TripletRecord>& records) {
  std::vector<CodeGrid> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_to_codes(codec, r.image));
  return out;
}

template <typename T>
Trainer<T>::Trainer(RunConfig config, std::vector<TripletRecord> train, std::vector<TripletRecord> heldout,
                    std::vector<CodeGrid> train_codes, std::vector<CodeGrid> heldout_codes)
    : config_(std::move(config)),
      train_(std::move(train)),
      heldout_(std::move(heldout)),
      train_codes_(std::move(train_codes)),
      heldout_codes_(std::move(heldout_codes)),
      model_(OptModel<T>::create(model_config_for(config_), config_.seed)),
      data_rng_(seeded(config_.seed, 1)),
      dropout_rng_(seeded(config_.seed, 2)) {
  if (train_.empty()) throw ValidationError("trainer: empty training set");
  const bool needs_codes = config_.train.task_probabilities[static_cast<std::size_t>(Task::kDir)] > 0.0;
  if (needs_codes && (train_codes_.size() != train_.size() ||
                      (!heldout_.empty() && heldout_codes_.size() != heldout_.size()))) {
    throw ValidationError("trainer: DIR is enabled but code grids do not cover the records");
  }
  if (config_.train.task_probabilities[static_cast<std::size_t>(Task::kSm)] > 0.0 &&
      std::min<std::size_t>(train_.size(), config_.train.batch_size) < 2) {
    throw ValidationError("trainer: SM needs batches of at least 2 samples");
  }
  adam_.learning_rate = config_.train.learning_rate;
}

template <typename T>
Task Trainer<T>::draw_task() {
  const auto& p = config_.train.task_probabilities;
  std::discrete_distribution<int> pick(p.begin(), p.end());
  return static_cast<Task>(pick(data_rng_));
}

template <typename T>
StepRecord Trainer<T>::step() {
  StepRecord rec;
  rec.step = ++step_;
  rec.task = draw_task();
  const auto indices = draw_indices(train_.size(), static_cast<std::size_t>(config_.train.batch_size), data_rng_);
  const Batch batch = make_batch(std::span<const TripletRecord>(train_), std::span<const std::size_t>(indices),
                                 rec.task, config_.train.masking, data_rng_,
                                 std::span<const CodeGrid>(train_codes_));
  model_.params.zero_grad();
  const auto bundle = batch_losses(model_, batch, config_.train.loss_weights,
                                   ForwardContext::train(config_.model.dropout_rate, dropout_rng_));
  rec.total = bundle.total.item();
  for (std::size_t i = 0; i < kLossTermCount; ++i) {
    if (bundle.terms[i].defined()) rec.terms[i] = bundle.terms[i].item();
  }
  if (!std::isfinite(rec.total)) {
    if (on_non_finite) on_non_finite(rec.step, batch);
    std::string ids;
    for (const auto& s : batch.samples) ids += " " + std::to_string(train_[s.record].record_id);
    throw NumericError("non-finite loss at step " + std::to_string(rec.step) + " (task " +
                       task_name(rec.task) + ", records" + ids + ")");
  }
  bundle.total.backward();
  rec.grad_norm = model_.params.clip_grad_norm(config_.train.clip_norm);
  rec.learning_rate = scheduled_learning_rate(config_.train.learning_rate, config_.train.warmup_steps, rec.step);
  adam_.learning_rate = rec.learning_rate;
  adam_step(model_.params, adam_);
  return rec;
}

template <typename T>
double Trainer<T>::heldout_loss() const {
  if (heldout_.empty()) throw ValidationError("trainer: no held-out records");
  NoGradGuard no_grad;
  const std::size_t n = std::min<std::size_t>(heldout_.size(), config_.train.eval_samples);
  const std::size_t bs = static_cast<std::size_t>(config_.train.batch_size);
  double sum = 0.0;
  std::size_t tasks = 0;
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    if (config_.train.task_probabilities[t] <= 0.0) continue;
    const Task task = static_cast<Task>(t);
    auto rng = seeded(config_.seed ^ 0xe7a1u, static_cast<std::uint32_t>(t));
    double task_sum = 0.0;
    std::size_t task_samples = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      std::vector<std::size_t> idx;
      for (std::size_t i = start; i < std::min(n, start + bs); ++i) idx.push_back(i);
      if (task == Task::kSm && idx.size() < 2) continue;
      const Batch batch = make_batch(std::span<const TripletRecord>(heldout_), std::span<const std::size_t>(idx),
                                     task, config_.train.masking, rng,
                                     std::span<const CodeGrid>(heldout_codes_));
      const auto bundle = batch_losses(model_, batch, config_.train.loss_weights, ForwardContext::eval());
      task_sum += bundle.total.item() * static_cast<double>(idx.size());
      task_samples += idx.size();
    }
    if (task_samples == 0) continue;
    sum += task_sum / static_cast<double>(task_samples);
    ++tasks;
  }
  if (tasks == 0) throw ValidationError("trainer: no task could be evaluated on the held-out set");
  return sum / static_cast<double>(tasks);
}

template <typename T>
bool Trainer<T>::update_early_stop(double heldout) {
  if (!early_.has_best || heldout < early_.best) {
    early_.best = heldout;
    early_.has_best = true;
    early_.bad_evaluations = 0;
  } else {
    ++early_.bad_evaluations;
  }
  early_.stopped = early_.bad_evaluations >= config_.train.patience;
  return early_.stopped;
}

template <typename T>
void Trainer<T>::save_checkpoint(const std::filesystem::path& path) const {
  Archive a;
  a.kind = "checkpoint";
  a.dtype = dtype_of<T>();
  a.set_meta("step", std::to_string(step_));
  a.set_meta("vocab_size", std::to_string(model_.config.vocab_size));
  a.set_meta("rng.data", engine_state(data_rng_));
  a.set_meta("rng.dropout", engine_state(dropout_rng_));
  a.set_meta("adam.step", std::to_string(adam_.step_count));
  a.set_meta("early.best", exact(early_.best));
  a.set_meta("early.has_best", early_.has_best ? "1" : "0");
  a.set_meta("early.bad", std::to_string(early_.bad_evaluations));
  a.set_meta("early.stopped", early_.stopped ? "1" : "0");
  for (const auto& [k, v] : config_.source.entries()) a.set_meta("config." + k, v);
  store_parameters(model_.params, a);
  if (!adam_.first_moment.empty()) {
    const auto& list = model_.params.list();
    for (std::size_t i = 0; i < list.size(); ++i) {
      a.arrays.push_back({"adam.m." + list[i].name, list[i].tensor.shape(),
                          std::vector<double>(adam_.first_moment[i].begin(), adam_.first_moment[i].end())});
      a.arrays.push_back({"adam.v." + list[i].name, list[i].tensor.shape(),
                          std::vector<double>(adam_.second_moment[i].begin(), adam_.second_moment[i].end())});
    }
  }
  write_archive(path, a);
}

template <typename T>
void Trainer<T>::load_checkpoint(const std::filesystem::path& path) {
  const auto a = read_archive(path);
  if (a.kind != "checkpoint") throw ParseError(path.string() + ": not a training checkpoint");
  const int step = static_cast<int>(parse_int(a.meta_value("step"), "step"));
  const auto adam_steps = parse_int(a.meta_value("adam.step"), "adam.step");
  EarlyStopState early;
  early.best = parse_exact(a.meta_value("early.best"), "early.best");
  early.has_best = a.meta_value("early.has_best") == "1";
  early.bad_evaluations = static_cast<int>(parse_int(a.meta_value("early.bad"), "early.bad"));
  early.stopped = a.meta_value("early.stopped") == "1";
  std::mt19937_64 data_rng, dropout_rng;
  restore_engine(data_rng, a.meta_value("rng.data"), "rng.data");
  restore_engine(dropout_rng, a.meta_value("rng.dropout"), "rng.dropout");

  AdamState<T> adam;
  adam.learning_rate = config_.train.learning_rate;
  adam.step_count = adam_steps;
  if (adam_steps > 0) {
    for (const auto& p : model_.params.list()) {
      const auto* m = a.find("adam.m." + p.name);
      const auto* v = a.find("adam.v." + p.name);
      if (m == nullptr || v == nullptr) throw ParseError("checkpoint lacks optimizer state for '" + p.name + "'");
      if (m->shape != p.tensor.shape() || v->shape != p.tensor.shape()) {
        throw DimensionError("optimizer state for '" + p.name + "' has the wrong shape");
      }
      adam.first_moment.emplace_back(m->values.begin(), m->values.end());
      adam.second_moment.emplace_back(v->values.begin(), v->values.end());
    }
  }
  load_parameters(model_.params, a);  // validates everything before writing
  adam_ = std::move(adam);
  step_ = step;
  early_ = early;
  data_rng_ = data_rng;
  dropout_rng_ = dropout_rng;
}

ConfigMap config_from_checkpoint(const Archive& archive) {
  ConfigMap map;
  for (const auto& [k, v] : archive.meta) {
    if (k.rfind("config.", 0) == 0) map.set(k.substr(7), v);
  }
  return map;
}

template <typename T>
OptModel<T> load_model(const std::filesystem::path& path, RunConfig* config_out) {
  const auto a = read_archive(path);
  if (a.kind != "checkpoint") throw ParseError(path.string() + ": not a model checkpoint");
  const auto config = RunConfig::from(config_from_checkpoint(a));
  ModelConfig mc = config.model;
  mc.vocab_size = static_cast<int>(parse_int(a.meta_value("vocab_size"), "vocab_size"));
  auto model = OptModel<T>::create(mc, config.seed);
  load_parameters(model.params, a);
  if (config_out) *config_out = config;
  return model;
}

template <typename T>
PretrainResult pretrain(const RunConfig& config, const PretrainOptions& options) {
  const DatasetLayout layout{config.data_root};
  for (const auto& p : {layout.train(), layout.heldout(), layout.vocab()}) {
    if (!std::filesystem::exists(p)) throw IoError("missing dataset file " + p.string());
  }
  auto train = read_dataset(layout.train());
  auto heldout = read_dataset(layout.heldout());
  std::vector<CodeGrid> train_codes, heldout_codes;
  std::optional<std::uint64_t> codec_sum;
  if (config.train.task_probabilities[static_cast<std::size_t>(Task::kDir)] > 0.0) {
    if (!std::filesystem::exists(config.codec_path)) {
      throw IoError("missing codec checkpoint " + config.codec_path.string() + " (run codec-train first)");
    }
    const auto codec = load_codec<T>(config.codec_path);
    if (codec.config.image_size != config.model.image_size || codec.config.code_grid != config.model.code_grid ||
        codec.config.codebook_size != config.model.codebook_size) {
      throw ConfigError("codec checkpoint does not match the model's image/code settings");
    }
    codec_sum = parameter_checksum(codec.params);
    train_codes = encode_records(codec, train);
    heldout_codes = encode_records(codec, heldout);
    if (parameter_checksum(codec.params) != *codec_sum) throw ContractError("codec parameters changed");
  }

  Trainer<T> trainer(config, std::move(train), std::move(heldout), std::move(train_codes),
                     std::move(heldout_codes));
  const auto dir = config.run_dir();
  std::filesystem::create_directories(dir / "samples");
  if (options.resume_from) trainer.load_checkpoint(*options.resume_from);
  {
    std::ofstream cfg(dir / "config.cfg", std::ios::trunc);
    cfg << config.source.render();
  }
  std::ofstream log(dir / "metrics.log", options.resume_from ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open " + (dir / "metrics.log").string());
  trainer.on_non_finite = [&](int step, const Batch& batch) {
    std::ofstream dump(dir / ("nonfinite-step-" + std::to_string(step) + ".txt"));
    dump << "step=" << step << " task=" << task_name(batch.task) << "\nrecords:";
    for (const auto& s : batch.samples) dump << ' ' << s.record;
    dump << '\n';
  };

  PretrainResult result;
  while (trainer.current_step() < config.train.max_steps && !trainer.early_stop().stopped) {
    auto rec = trainer.step();
    bool stop = false;
    if (config.train.eval_every > 0 && rec.step % config.train.eval_every == 0) {
      rec.heldout = trainer.heldout_loss();
      result.last_heldout = rec.heldout;
      stop = trainer.update_early_stop(*rec.heldout);
    }
    log << format_step(rec) << '\n';
    log.flush();
    if (config.train.checkpoint_every > 0 && rec.step % config.train.checkpoint_every == 0) {
      trainer.save_checkpoint(dir / ("ckpt-" + std::to_string(rec.step) + ".bin"));
    }
    if (options.on_step) options.on_step(rec);
    if (stop) break;
  }
  result.steps = trainer.current_step();
  result.stopped_early = trainer.early_stop().stopped;
  result.final_checkpoint = dir / "ckpt-final.bin";
  trainer.save_checkpoint(result.final_checkpoint);
  return result;
}

#define OMNIPT_INSTANTIATE_TRAINER(T)                                                              \
  template class Trainer<T>;                                                                       \
  template PretrainResult pretrain<T>(const RunConfig&, const PretrainOptions&);                   \
  template OptModel<T> load_model<T>(const std::filesystem::path&, RunConfig*);                    \
  template std::vector<CodeGrid> encode_records(const ImageCodec<T>&, const std::vector<TripletRecord>&); \
  template std::uint64_t parameter_checksum(const ParameterSet<T>&);

OMNIPT_INSTANTIATE_TRAINER(float)
OMNIPT_INSTANTIATE_TRAINER(double)

}  // namespace omnipt
