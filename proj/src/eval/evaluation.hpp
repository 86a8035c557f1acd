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

#include <filesystem>
#include <string>
#include <vector>

#include "eval/metrics.hpp"
#include "model/opt_model.hpp"
#include "trainer/run_config.hpp"

namespace omnipt {

struct ModalitySet {
  bool text = false;
  bool vision = false;
  bool audio = false;

  bool has(Modality m) const;
  bool empty() const { return !text && !vision && !audio; }
  std::size_t count() const { return (text ? 1 : 0) + (vision ? 1 : 0) + (audio ? 1 : 0); }
  // "text+audio"
  std::string name() const;
  static ModalitySet of(std::initializer_list<Modality> modalities);
};

struct RetrievalTask {
  ModalitySet query;
  Modality target = Modality::kVision;

  void validate() const;
  // "text+audio->image"
  std::string name() const;
};

// Matching-head slot for the modalities present: all three -> case 1,
// vision+audio -> case 2, text+vision -> case 3, text+audio -> case 4.
int retrieval_slot(const ModalitySet& present);

// Query modalities from `query`, the target modality from `candidate`, the
// remaining modality dropped; returns the sigmoid score of the slot.
template <typename T>
double retrieval_score(const OptModel<T>& model, const TripletRecord& query, const TripletRecord& candidate,
                       const RetrievalTask& task);

struct RetrievalResult {
  std::string task;
  double r1 = 0, r5 = 0, r10 = 0;
  std::size_t pool = 0;
};

// Query i's gold candidate is record i of the pool (the first `pool` records).
template <typename T>
RetrievalResult evaluate_retrieval(const OptModel<T>& model, const std::vector<TripletRecord>& records,
                                   const RetrievalTask& task, std::size_t pool);

// Mean of the encoder output over every valid non-[CLS] position.
template <typename T>
std::vector<double> pooled_features(const OptModel<T>& model, const TripletRecord& record, const ModalitySet& inputs);

struct ProbeResult {
  std::string inputs;
  MapResult map;
  std::size_t train = 0, heldout = 0;
};

// Frozen features, one linear layer trained with BCE on multi-hot scene
// classes, mAP on the held-out records.
template <typename T>
ProbeResult linear_probe(const OptModel<T>& model, const std::vector<TripletRecord>& train,
                         const std::vector<TripletRecord>& heldout, const ModalitySet& inputs,
                         const EvalOptions& options);

// Greedy-or-sampled text from the given input modalities.
template <typename T>
std::vector<int> describe(const OptModel<T>& model, const TripletRecord& record, const ModalitySet& inputs,
                          const GenerationParams& gen);

// Text-to-image: the caption alone is encoded and the image decoder emits a
// code grid for the codec.
template <typename T>
CodeGrid imagine(const OptModel<T>& model, std::span<const int> token_ids, const GenerationParams& gen);

struct TextResult {
  std::string inputs;
  double wer = 0.0;          // corpus-level: total edits / total reference words
  double exact_match = 0.0;  // fraction reproducing the reference exactly
  std::size_t samples = 0;
};

template <typename T>
TextResult evaluate_text(const OptModel<T>& model, const std::vector<TripletRecord>& records,
                         const ModalitySet& inputs, std::size_t samples, const Vocabulary& vocab,
                         const GenerationParams& gen);

// One metric per line: "<task> <metric> <value> <n> <seed>".
struct MetricReport {
  std::string task;
  std::string metric;
  double value = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

std::string format_report(const std::vector<MetricReport>& reports);
std::vector<MetricReport> parse_report(const std::string& text);

std::vector<RetrievalTask> default_retrieval_tasks();
std::vector<ModalitySet> default_probe_inputs();

template <typename T>
std::vector<MetricReport> evaluate_retrieval_suite(const OptModel<T>& model, const std::vector<TripletRecord>& heldout,
                                                   const EvalOptions& options);
template <typename T>
std::vector<MetricReport> evaluate_probe_suite(const OptModel<T>& model, const std::vector<TripletRecord>& train,
                                               const std::vector<TripletRecord>& heldout, const EvalOptions& options);
// Audio-only and audio+image transcription, plus image captioning.
template <typename T>
std::vector<MetricReport> evaluate_text_suite(const OptModel<T>& model, const std::vector<TripletRecord>& heldout,
                                              const Vocabulary& vocab, const EvalOptions& options);

}  // namespace omnipt
