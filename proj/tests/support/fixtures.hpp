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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "codec/image_codec.hpp"
#include "data/batch.hpp"
#include "data/synth.hpp"
#include "model/opt_model.hpp"
#include "numerics/parameters.hpp"
#include "support/temp_dir.hpp"

namespace omnipt::testing {

// Small enough for exhaustive finite differences, large enough to exercise
// multi-head attention and both decoders.
inline ModelConfig toy_config() {
  ModelConfig c;
  c.d_h = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.ffn_mult = 2;
  c.decoder_layers = 1;
  c.vocab_size = synth_vocabulary().size();
  c.codebook_size = 16;
  c.code_grid = 2;
  c.dropout_rate = 0.0;
  return c;
}

inline std::vector<TripletRecord> make_records(std::size_t n, std::uint64_t seed = 5,
                                               std::uint64_t first_id = 0) {
  SynthConfig cfg;
  cfg.seed = seed;
  const auto vocab = synth_vocabulary();
  const auto bank = SignatureBank::create(cfg, vocab);
  std::vector<TripletRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_record(first_id + i, cfg, bank, vocab));
  return out;
}

inline std::vector<CodeGrid> random_codes(std::size_t n, int grid, int codebook, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, codebook - 1);
  std::vector<CodeGrid> out(n);
  for (auto& g : out) {
    g.grid = grid;
    for (int i = 0; i < grid * grid; ++i) g.ids.push_back(pick(rng));
  }
  return out;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

struct GradCheckResult {
  std::size_t checked = 0;        // entries with a non-zero analytic gradient
  double max_relative = 0.0;
  std::size_t zero_checked = 0;   // entries the loss does not depend on
  double max_zero_abs = 0.0;      // largest |finite difference| among those
  std::string worst;              // parameter holding the worst entry
  double worst_analytic = 0.0, worst_numeric = 0.0;
};

// Central differences at step h on `samples` entries drawn uniformly from the
// parameter entries with a non-zero analytic gradient, plus up to samples/5
// entries whose analytic gradient is exactly zero.
// Relative error is |a - n| / max(|a|, |n|, floor). At h = 1e-5 the rounding
// noise of a 64-bit difference quotient is around 1e-10, so the floor keeps
// gradients near that noise from reading as large relative errors.
inline GradCheckResult gradient_check(ParameterSet<double>& params, const std::function<Tensor<double>()>& loss,
                                      std::size_t samples, std::uint64_t seed, double h = 1e-5,
                                      double floor = 1e-6) {
  params.zero_grad();
  loss().backward();
  struct Entry {
    std::size_t param, index;
  };
  std::vector<Entry> live, dead;
  const auto& list = params.list();
  for (std::size_t p = 0; p < list.size(); ++p) {
    const auto grad = list[p].tensor.grad();
    for (std::size_t i = 0; i < list[p].tensor.numel(); ++i) {
      (grad.empty() || grad[i] == 0.0 ? dead : live).push_back({p, i});
    }
  }
  std::mt19937_64 rng(seed);
  auto pick = [&](std::vector<Entry>& from, std::size_t count) {
    std::shuffle(from.begin(), from.end(), rng);
    from.resize(std::min(count, from.size()));
  };
  pick(live, samples);
  pick(dead, samples / 5);

  GradCheckResult result;
  auto numeric = [&](const Entry& e) {
    auto tensor = params.list()[e.param].tensor;
    auto values = tensor.data_mut();
    const double saved = values[e.index];
    values[e.index] = saved + h;
    const double up = loss().item();
    values[e.index] = saved - h;
    const double down = loss().item();
    values[e.index] = saved;
    return (up - down) / (2.0 * h);
  };
  for (const auto& e : live) {
    const double a = params.list()[e.param].tensor.grad()[e.index];
    const double n = numeric(e);
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    if (rel > result.max_relative) {
      result.max_relative = rel;
      result.worst = params.list()[e.param].name + "[" + std::to_string(e.index) + "]";
      result.worst_analytic = a;
      result.worst_numeric = n;
    }
    ++result.checked;
  }
  for (const auto& e : dead) {
    result.max_zero_abs = std::max(result.max_zero_abs, std::abs(numeric(e)));
    ++result.zero_checked;
  }
  return result;
}

inline Task task_for(LossTerm term) {
  switch (term) {
    case LossTerm::kMlm:
      return Task::kMlm;
    case LossTerm::kMvfr:
    case LossTerm::kMrc:
      return Task::kMvm;
    case LossTerm::kMafr:
    case LossTerm::kMamNce:
      return Task::kMam;
    case LossTerm::kDtr:
      return Task::kDtr;
    case LossTerm::kDir:
      return Task::kDir;
    case LossTerm::kSm:
      return Task::kSm;
  }
  return Task::kMlm;
}

// Finite-difference check of one loss term over every parameter of a 64-bit
// model, evaluated through batch_losses in eval mode on a fixed batch.
inline GradCheckResult loss_term_gradient_check(OptModel<double>& model, LossTerm term, std::size_t batch_size,
                                                std::size_t samples, std::uint64_t seed) {
  const auto records = make_records(batch_size, seed);
  const auto codes = random_codes(batch_size, model.config.code_grid, model.config.codebook_size, seed);
  const auto indices = iota_indices(batch_size);
  std::mt19937_64 rng(seed);
  const auto batch = make_batch(std::span<const TripletRecord>(records), std::span<const std::size_t>(indices),
                                task_for(term), BatchOptions{}, rng, std::span<const CodeGrid>(codes));
  LossWeights weights;
  weights.values.fill(0.0);
  weights[term] = 1.0;
  const auto ctx = ForwardContext::eval();
  return gradient_check(model.params, [&] {
    const auto bundle = batch_losses(model, batch, weights, ctx);
    if (!bundle.active(term)) throw ContractError("loss term inactive on the check batch");
    return bundle.total;
  }, samples, seed);
}

}  // namespace omnipt::testing
