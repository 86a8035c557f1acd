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

#include "trainer/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace omnipt {

namespace {

const std::vector<std::pair<std::string, std::string>>& default_entries() {
  static const std::vector<std::pair<std::string, std::string>> entries = {
      {"run.name", "desk"},
      {"run.root", "runs"},
      {"run.seed", "1"},
      {"run.precision", "f32"},
      {"data.root", "data/desk"},
      {"data.train_count", "2048"},
      {"data.heldout_count", "256"},
      {"data.seed", "7"},
      {"data.layout_grid", "4"},
      {"data.frames_per_word", "2"},
      {"data.region_noise", "0.05"},
      {"data.audio_noise", "0.05"},
      {"model.d_h", "64"},
      {"model.n_layers", "2"},
      {"model.n_heads", "4"},
      {"model.ffn_mult", "4"},
      {"model.decoder_layers", "2"},
      {"model.max_text_len", "24"},
      {"model.max_regions", "8"},
      {"model.max_audio_len", "48"},
      {"model.d_v", "64"},
      {"model.d_a", "32"},
      {"model.n_classes", "32"},
      {"model.dropout", "0.1"},
      {"model.ln_epsilon", "1e-5"},
      {"model.image_size", "32"},
      {"codec.path", ""},
      {"codec.code_grid", "4"},
      {"codec.codebook_size", "128"},
      {"codec.code_dim", "32"},
      {"codec.hidden", "256"},
      {"codec.tau_start", "1.0"},
      {"codec.tau_floor", "1/16"},
      {"codec.lr", "2e-3"},
      {"codec.batch", "16"},
      {"codec.diversity", "0.1"},
      {"codec.straight_through", "false"},
      {"codec.epochs", "30"},
      {"codec.images", "256"},
      {"codec.seed", "3"},
      {"train.lr", "1e-3"},
      {"train.warmup_steps", "100"},
      {"train.batch", "16"},
      {"train.max_steps", "2000"},
      {"train.clip_norm", "1.0"},
      {"train.checkpoint_every", "500"},
      {"train.eval_every", "200"},
      {"train.eval_samples", "256"},
      {"train.patience", "5"},
      {"mask.token_rate", "0.15"},
      {"mask.modality_rate", "0.3"},
      {"mask.dir_image_drop", "0.5"},
      {"task.mlm", "1/6"},
      {"task.mvm", "1/6"},
      {"task.mam", "1/6"},
      {"task.dtr", "1/6"},
      {"task.dir", "1/6"},
      {"task.sm", "1/6"},
      {"loss.mlm", "1"},
      {"loss.mvfr", "1"},
      {"loss.mrc", "1"},
      {"loss.mafr", "1"},
      {"loss.mam_nce", "1"},
      {"loss.dtr", "1"},
      {"loss.dir", "1"},
      {"loss.sm", "1"},
      {"eval.pool", "64"},
      {"eval.probe_train", "512"},
      {"eval.probe_epochs", "200"},
      {"eval.probe_lr", "0.05"},
      {"eval.wer_samples", "64"},
      {"eval.caption_samples", "64"},
      {"eval.seed", "11"},
      {"gen.max_len", "24"},
      {"gen.top_k", "1"},
      {"gen.temperature", "1.0"},
      {"gen.seed", "0"},
  };
  return entries;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap::ConfigMap() {
  for (const auto& [k, v] : default_entries()) values_[k] = v;
}

std::string ConfigMap::resolve(const std::string& key) const {
  if (values_.count(key)) return key;
  if (key.find('.') == std::string::npos) {
    std::string found;
    for (const auto& [k, v] : values_) {
      if (k.substr(k.rfind('.') + 1) == key) {
        if (!found.empty()) throw ConfigError("ambiguous key '" + key + "' (" + found + ", " + k + ")");
        found = k;
      }
    }
    if (!found.empty()) return found;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void ConfigMap::set(const std::string& key, const std::string& value) { values_[resolve(key)] = value; }

void ConfigMap::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigMap::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!values_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
    values_[key] = trim(line.substr(eq + 1));
  }
}

void ConfigMap::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  merge_text(text.str(), path.string());
}

const std::string& ConfigMap::raw(const std::string& key) const { return values_.at(resolve(key)); }

long long ConfigMap::integer(const std::string& key) const {
  const auto& v = raw(key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("config '" + key + "': '" + v + "' is not an integer");
  return out;
}

double ConfigMap::real(const std::string& key) const {
  const auto& v = raw(key);
  auto parse = [&](const std::string& s) {
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(s, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(out)) {
      throw ConfigError("config '" + key + "': '" + v + "' is not a number");
    }
    return out;
  };
  const auto slash = v.find('/');
  if (slash == std::string::npos) return parse(v);
  const double den = parse(trim(v.substr(slash + 1)));
  if (den == 0.0) throw ConfigError("config '" + key + "': zero denominator");
  return parse(trim(v.substr(0, slash))) / den;
}

bool ConfigMap::boolean(const std::string& key) const {
  const auto& v = raw(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config '" + key + "': '" + v + "' is not a boolean");
}

std::string ConfigMap::render() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

RunConfig RunConfig::from(const ConfigMap& m) {
  RunConfig c;
  c.source = m;
  auto positive = [&](const char* key) {
    const auto v = m.integer(key);
    if (v <= 0) throw ConfigError(std::string("config '") + key + "' must be positive");
    return static_cast<int>(v);
  };
  auto non_negative = [&](const char* key) {
    const auto v = m.integer(key);
    if (v < 0) throw ConfigError(std::string("config '") + key + "' must be >= 0");
    return static_cast<int>(v);
  };
  auto unit = [&](const char* key, bool allow_one) {
    const double v = m.real(key);
    if (v < 0.0 || v > 1.0 || (!allow_one && v == 1.0)) {
      throw ConfigError(std::string("config '") + key + "' out of range");
    }
    return v;
  };

  c.name = m.text("run.name");
  if (c.name.empty() || c.name.find('/') != std::string::npos) throw ConfigError("run.name must be a plain name");
  c.run_root = m.text("run.root");
  c.seed = static_cast<std::uint64_t>(m.integer("run.seed"));
  try {
    c.precision = parse_dtype(m.text("run.precision"));
  } catch (const ParseError& e) {
    throw ConfigError(std::string("run.precision: ") + e.what());
  }

  c.data_root = m.text("data.root");
  c.train_count = static_cast<std::size_t>(positive("data.train_count"));
  c.heldout_count = static_cast<std::size_t>(positive("data.heldout_count"));

  auto& mc = c.model;
  mc.d_h = positive("model.d_h");
  mc.n_layers = positive("model.n_layers");
  mc.n_heads = positive("model.n_heads");
  mc.ffn_mult = positive("model.ffn_mult");
  mc.decoder_layers = positive("model.decoder_layers");
  mc.max_text_len = positive("model.max_text_len");
  mc.max_regions = positive("model.max_regions");
  mc.max_audio_len = positive("model.max_audio_len");
  mc.d_v = positive("model.d_v");
  mc.d_a = positive("model.d_a");
  mc.n_classes = positive("model.n_classes");
  mc.dropout_rate = unit("model.dropout", false);
  mc.ln_epsilon = m.real("model.ln_epsilon");
  mc.image_size = positive("model.image_size");
  mc.code_grid = positive("codec.code_grid");
  mc.codebook_size = positive("codec.codebook_size");

  c.synth.seed = static_cast<std::uint64_t>(m.integer("data.seed"));
  c.synth.image_size = mc.image_size;
  c.synth.layout_grid = positive("data.layout_grid");
  c.synth.d_v = mc.d_v;
  c.synth.d_a = mc.d_a;
  c.synth.frames_per_word = positive("data.frames_per_word");
  c.synth.region_noise = m.real("data.region_noise");
  c.synth.audio_noise = m.real("data.audio_noise");
  c.synth.validate();

  c.codec.image_size = mc.image_size;
  c.codec.code_grid = mc.code_grid;
  c.codec.codebook_size = mc.codebook_size;
  c.codec.code_dim = positive("codec.code_dim");
  c.codec.hidden = positive("codec.hidden");
  c.codec.tau_start = m.real("codec.tau_start");
  c.codec.tau_floor = m.real("codec.tau_floor");
  c.codec.learning_rate = m.real("codec.lr");
  c.codec.batch_size = positive("codec.batch");
  c.codec.diversity_weight = m.real("codec.diversity");
  c.codec.straight_through = m.boolean("codec.straight_through");
  c.codec.seed = static_cast<std::uint64_t>(m.integer("codec.seed"));
  c.codec.validate();
  c.codec_path = m.text("codec.path").empty() ? c.data_root / "codec.bin"
                                              : std::filesystem::path(m.text("codec.path"));
  c.codec_epochs = positive("codec.epochs");
  c.codec_images = positive("codec.images");

  auto& t = c.train;
  t.learning_rate = m.real("train.lr");
  if (!(t.learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
  t.warmup_steps = non_negative("train.warmup_steps");
  t.batch_size = positive("train.batch");
  t.max_steps = non_negative("train.max_steps");
  t.clip_norm = m.real("train.clip_norm");
  if (!(t.clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  t.checkpoint_every = non_negative("train.checkpoint_every");
  t.eval_every = non_negative("train.eval_every");
  t.eval_samples = positive("train.eval_samples");
  t.patience = positive("train.patience");
  t.masking.token_mask_rate = unit("mask.token_rate", false);
  if (t.masking.token_mask_rate == 0.0) throw ConfigError("mask.token_rate must be positive");
  t.masking.modality_drop_rate = unit("mask.modality_rate", false);
  t.masking.dir_image_drop = unit("mask.dir_image_drop", true);

  double total = 0.0;
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    const std::string key = std::string("task.") + task_name(static_cast<Task>(i));
    t.task_probabilities[i] = unit(key.c_str(), true);
    total += t.task_probabilities[i];
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ConfigError("task.* probabilities sum to " + std::to_string(total) + ", expected 1");
  }
  for (std::size_t i = 0; i < kLossTermCount; ++i) {
    const std::string key = std::string("loss.") + loss_term_name(static_cast<LossTerm>(i));
    const double w = m.real(key);
    if (w < 0.0) throw ConfigError(key + " must be >= 0");
    t.loss_weights.values[i] = w;
  }

  c.eval.pool = positive("eval.pool");
  if (c.eval.pool < 2) throw ConfigError("eval.pool must be at least 2");
  c.eval.probe_train = positive("eval.probe_train");
  c.eval.probe_epochs = positive("eval.probe_epochs");
  c.eval.probe_lr = m.real("eval.probe_lr");
  c.eval.wer_samples = positive("eval.wer_samples");
  c.eval.caption_samples = positive("eval.caption_samples");
  c.eval.seed = static_cast<std::uint64_t>(m.integer("eval.seed"));

  c.generation.max_len = static_cast<std::size_t>(positive("gen.max_len"));
  c.generation.top_k = positive("gen.top_k");
  c.generation.temperature = m.real("gen.temperature");
  if (!(c.generation.temperature > 0.0)) throw ConfigError("gen.temperature must be positive");
  c.generation.seed = static_cast<std::uint64_t>(m.integer("gen.seed"));
  return c;
}

}  // namespace omnipt
