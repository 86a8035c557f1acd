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

#include "eval/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace omnipt {

namespace {

const char* modality_word(Modality m) {
  switch (m) {
    case Modality::kText:
      return "text";
    case Modality::kVision:
      return "image";
    default:
      return "audio";
  }
}

ModalityMaskPlan drops_for(const ModalitySet& present) {
  ModalityMaskPlan plan;
  plan.drop_text = !present.text;
  plan.drop_vision = !present.vision;
  plan.drop_audio = !present.audio;
  return plan;
}

void copy_modality(BatchSample& dst, const TripletRecord& src, Modality m) {
  const auto full = sample_from_record(src);
  switch (m) {
    case Modality::kText:
      dst.text = full.text;
      dst.text_valid = full.text_valid;
      break;
    case Modality::kVision:
      dst.regions = full.regions;
      dst.locations = full.locations;
      dst.region_valid = full.region_valid;
      break;
    case Modality::kAudio:
      dst.audio = full.audio;
      dst.audio_valid = full.audio_valid;
      break;
  }
}

constexpr Modality kAll[] = {Modality::kText, Modality::kVision, Modality::kAudio};

}  // namespace

bool ModalitySet::has(Modality m) const {
  return m == Modality::kText ? text : (m == Modality::kVision ? vision : audio);
}

std::string ModalitySet::name() const {
  std::string out;
  for (auto m : kAll) {
    if (!has(m)) continue;
    if (!out.empty()) out += '+';
    out += modality_word(m);
  }
  return out.empty() ? "none" : out;
}

ModalitySet ModalitySet::of(std::initializer_list<Modality> modalities) {
  ModalitySet s;
  for (auto m : modalities) {
    if (m == Modality::kText) s.text = true;
    if (m == Modality::kVision) s.vision = true;
    if (m == Modality::kAudio) s.audio = true;
  }
  return s;
}

void RetrievalTask::validate() const {
  if (query.empty()) throw ValidationError("retrieval: empty query modality set");
  if (query.has(target)) {
    throw ValidationError(std::string("retrieval: target modality '") + modality_word(target) +
                          "' is also a query modality");
  }
}

std::string RetrievalTask::name() const { return query.name() + "->" + modality_word(target); }

int retrieval_slot(const ModalitySet& present) {
  if (present.text && present.vision && present.audio) return 0;
  if (present.vision && present.audio) return 1;
  if (present.text && present.vision) return 2;
  if (present.text && present.audio) return 3;
  throw ValidationError("retrieval: need at least two modalities to score a match");
}

template <typename T>
double retrieval_score(const OptModel<T>& model, const TripletRecord& query, const TripletRecord& candidate,
                       const RetrievalTask& task) {
  task.validate();
  ModalitySet present = task.query;
  if (task.target == Modality::kText) present.text = true;
  if (task.target == Modality::kVision) present.vision = true;
  if (task.target == Modality::kAudio) present.audio = true;
  const int slot = retrieval_slot(present);
  BatchSample sample;
  for (auto m : kAll) {
    if (task.query.has(m)) copy_modality(sample, query, m);
  }
  copy_modality(sample, candidate, task.target);
  NoGradGuard no_grad;
  const auto enc = encode_sample(model, sample, drops_for(present), ForwardContext::eval());
  const auto scores = match_scores(cls_state(enc.encoded), model.heads);
  return static_cast<double>(scores.at(static_cast<std::size_t>(slot)));
}

template <typename T>
RetrievalResult evaluate_retrieval(const OptModel<T>& model, const std::vector<TripletRecord>& records,
                                   const RetrievalTask& task, std::size_t pool) {
  task.validate();
  if (pool < 2 || pool > records.size()) {
    throw ValidationError("retrieval: pool of " + std::to_string(pool) + " needs 2.." +
                          std::to_string(records.size()) + " records");
  }
  std::vector<std::vector<double>> scores(pool, std::vector<double>(pool));
  std::vector<std::size_t> gold(pool);
  for (std::size_t q = 0; q < pool; ++q) {
    gold[q] = q;
    for (std::size_t c = 0; c < pool; ++c) scores[q][c] = retrieval_score(model, records[q], records[c], task);
  }
  RetrievalResult out;
  out.task = task.name();
  out.pool = pool;
  out.r1 = recall_at_k(scores, gold, 1);
  out.r5 = recall_at_k(scores, gold, std::min<std::size_t>(5, pool));
  out.r10 = recall_at_k(scores, gold, std::min<std::size_t>(10, pool));
  return out;
}

template <typename T>
std::vector<double> pooled_features(const OptModel<T>& model, const TripletRecord& record, const ModalitySet& inputs) {
  if (inputs.empty()) throw ValidationError("pooled_features: no input modality");
  NoGradGuard no_grad;
  const auto enc = encode_sample(model, sample_from_record(record), drops_for(inputs), ForwardContext::eval());
  const std::size_t d = enc.encoded.cols();
  std::vector<double> out(d, 0.0);
  std::size_t count = 0;
  for (std::size_t r = 1; r < enc.sequence.length(); ++r) {
    if (!enc.sequence.attention_mask[r]) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += static_cast<double>(enc.encoded.at(r, j));
    ++count;
  }
  for (auto& v : out) v /= static_cast<double>(count);
  return out;
}

template <typename T>
ProbeResult linear_probe(const OptModel<T>& model, const std::vector<TripletRecord>& train,
                         const std::vector<TripletRecord>& heldout, const ModalitySet& inputs,
                         const EvalOptions& options) {
  const std::size_t n_train = std::min<std::size_t>(train.size(), options.probe_train);
  if (n_train == 0 || heldout.empty()) throw ValidationError("linear_probe: empty split");
  const auto classes = static_cast<std::size_t>(model.config.n_classes);
  const auto d = static_cast<std::size_t>(model.config.d_h);

  auto features = [&](const std::vector<TripletRecord>& recs, std::size_t n) {
    std::vector<double> x;
    x.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = pooled_features(model, recs[i], inputs);
      x.insert(x.end(), f.begin(), f.end());
    }
    return x;
  };
  auto labels = [&](const std::vector<TripletRecord>& recs, std::size_t n) {
    std::vector<double> y(n * classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c : recs[i].classes()) {
        if (c < 0 || static_cast<std::size_t>(c) >= classes) throw ValidationError("linear_probe: class out of range");
        y[i * classes + static_cast<std::size_t>(c)] = 1.0;
      }
    }
    return y;
  };

  // Features are standardized with train statistics so the probe's optimizer
  // sees every dimension on one scale.
  auto x_train_values = features(train, n_train);
  std::vector<double> mu(d, 0.0), sigma(d, 0.0);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t j = 0; j < d; ++j) mu[j] += x_train_values[i * d + j] / static_cast<double>(n_train);
  }
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x_train_values[i * d + j] - mu[j];
      sigma[j] += c * c / static_cast<double>(n_train);
    }
  }
  for (auto& s : sigma) s = std::sqrt(s) + 1e-8;
  auto standardize = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - mu[i % d]) / sigma[i % d];
  };
  standardize(x_train_values);
  const auto x_train = Tensor<double>::from_data({n_train, d}, std::move(x_train_values));
  const auto y_train = labels(train, n_train);
  ParameterSet<double> probe;
  auto w = probe.add_zeros("probe.w", {d, classes});
  auto b = probe.add_zeros("probe.b", {classes});
  AdamState<double> adam;
  adam.learning_rate = options.probe_lr;
  for (int epoch = 0; epoch < options.probe_epochs; ++epoch) {
    probe.zero_grad();
    const auto loss = binary_cross_entropy(sigmoid(linear(x_train, w, b)), std::span<const double>(y_train));
    loss.backward();
    adam_step(probe, adam);
  }

  auto x_held_values = features(heldout, heldout.size());
  standardize(x_held_values);
  const auto x_held = Tensor<double>::from_data({heldout.size(), d}, std::move(x_held_values));
  const auto y_held = labels(heldout, heldout.size());
  const auto logits = linear(x_held, w, b);
  std::vector<std::uint8_t> mask(y_held.begin(), y_held.end());
  ProbeResult out;
  out.inputs = inputs.name();
  out.map = mean_average_precision(logits.data(), mask, classes);
  out.train = n_train;
  out.heldout = heldout.size();
  return out;
}

template <typename T>
std::vector<int> describe(const OptModel<T>& model, const TripletRecord& record, const ModalitySet& inputs,
                          const GenerationParams& gen) {
  if (inputs.empty()) throw ValidationError("describe: no input modality");
  NoGradGuard no_grad;
  const auto enc = encode_sample(model, sample_from_record(record), drops_for(inputs), ForwardContext::eval());
  return generate_text(model.text_decoder, enc.memory(), gen);
}

template <typename T>
CodeGrid imagine(const OptModel<T>& model, std::span<const int> token_ids, const GenerationParams& gen) {
  if (token_ids.empty()) throw ValidationError("imagine: empty text");
  for (int id : token_ids) {
    if (id < 0 || id >= model.config.vocab_size) {
      throw ValidationError("imagine: token id " + std::to_string(id) + " outside the vocabulary");
    }
  }
  NoGradGuard no_grad;
  BatchSample sample;
  sample.text.assign(token_ids.begin(), token_ids.end());
  sample.text_valid = sample.text.size();
  const auto enc = encode_sample(model, sample, drops_for(ModalitySet::of({Modality::kText})),
                                 ForwardContext::eval());
  const auto count = static_cast<std::size_t>(model.config.code_count());
  return {model.config.code_grid, generate_image_codes(model.image_decoder, enc.memory(), count, gen)};
}

template <typename T>
TextResult evaluate_text(const OptModel<T>& model, const std::vector<TripletRecord>& records,
                         const ModalitySet& inputs, std::size_t samples, const Vocabulary& vocab,
                         const GenerationParams& gen) {
  const std::size_t n = std::min(samples, records.size());
  if (n == 0) throw ValidationError("evaluate_text: no records");
  std::size_t edits = 0, words = 0, exact = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ids = describe(model, records[i], inputs, gen);
    const auto hyp = split_words(detokenize(std::span<const int>(ids), vocab));
    const auto& ref = records[i].transcript;
    edits += edit_distance(hyp, ref);
    words += ref.size();
    if (hyp == ref) ++exact;
  }
  TextResult out;
  out.inputs = inputs.name();
  out.wer = static_cast<double>(edits) / static_cast<double>(words);
  out.exact_match = static_cast<double>(exact) / static_cast<double>(n);
  out.samples = n;
  return out;
}

std::string format_report(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    char value[40];
    std::snprintf(value, sizeof value, "%.17g", r.value);
    out << r.task << ' ' << r.metric << ' ' << value << ' ' << r.n << ' ' << r.seed << '\n';
  }
  return out.str();
}

std::vector<MetricReport> parse_report(const std::string& text) {
  std::vector<MetricReport> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    MetricReport r;
    if (!(fields >> r.task >> r.metric >> r.value >> r.n >> r.seed)) {
      throw ParseError("report line " + std::to_string(line_no) + ": expected task metric value n seed");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<RetrievalTask> default_retrieval_tasks() {
  return {{ModalitySet::of({Modality::kText}), Modality::kVision},
          {ModalitySet::of({Modality::kAudio}), Modality::kText},
          {ModalitySet::of({Modality::kText, Modality::kAudio}), Modality::kVision},
          {ModalitySet::of({Modality::kVision}), Modality::kText}};
}

std::vector<ModalitySet> default_probe_inputs() {
  return {ModalitySet::of({Modality::kText}), ModalitySet::of({Modality::kVision}),
          ModalitySet::of({Modality::kAudio}),
          ModalitySet::of({Modality::kText, Modality::kVision, Modality::kAudio})};
}

template <typename T>
std::vector<MetricReport> evaluate_retrieval_suite(const OptModel<T>& model, const std::vector<TripletRecord>& heldout,
                                                   const EvalOptions& options) {
  std::vector<MetricReport> out;
  const auto pool = std::min<std::size_t>(static_cast<std::size_t>(options.pool), heldout.size());
  for (const auto& task : default_retrieval_tasks()) {
    const auto r = evaluate_retrieval(model, heldout, task, pool);
    const std::string name = "retrieval:" + r.task;
    out.push_back({name, "R@1", r.r1, pool, options.seed});
    out.push_back({name, "R@5", r.r5, pool, options.seed});
    out.push_back({name, "R@10", r.r10, pool, options.seed});
  }
  return out;
}

template <typename T>
std::vector<MetricReport> evaluate_probe_suite(const OptModel<T>& model, const std::vector<TripletRecord>& train,
                                               const std::vector<TripletRecord>& heldout, const EvalOptions& options) {
  std::vector<MetricReport> out;
  for (const auto& inputs : default_probe_inputs()) {
    const auto r = linear_probe(model, train, heldout, inputs, options);
    out.push_back({"probe:" + r.inputs, "mAP", r.map.mean, r.heldout, options.seed});
    out.push_back({"probe:" + r.inputs, "skipped_classes", static_cast<double>(r.map.skipped.size()), r.heldout,
                   options.seed});
  }
  return out;
}

template <typename T>
std::vector<MetricReport> evaluate_text_suite(const OptModel<T>& model, const std::vector<TripletRecord>& heldout,
                                              const Vocabulary& vocab, const EvalOptions& options) {
  GenerationParams greedy;
  greedy.max_len = static_cast<std::size_t>(model.config.max_text_len);
  greedy.top_k = 1;
  std::vector<MetricReport> out;
  for (const auto& inputs : {ModalitySet::of({Modality::kAudio}), ModalitySet::of({Modality::kAudio, Modality::kVision})}) {
    const auto r = evaluate_text(model, heldout, inputs, static_cast<std::size_t>(options.wer_samples), vocab, greedy);
    out.push_back({"asr:" + r.inputs, "WER", r.wer, r.samples, options.seed});
  }
  const auto cap = evaluate_text(model, heldout, ModalitySet::of({Modality::kVision}),
                                 static_cast<std::size_t>(options.caption_samples), vocab, greedy);
  out.push_back({"caption:image", "exact_match", cap.exact_match, cap.samples, options.seed});
  out.push_back({"caption:image", "WER", cap.wer, cap.samples, options.seed});
  return out;
}

#define OMNIPT_INSTANTIATE_EVAL(T)                                                                             \
  template double retrieval_score(const OptModel<T>&, const TripletRecord&, const TripletRecord&,              \
                                  const RetrievalTask&);                                                       \
  template RetrievalResult evaluate_retrieval(const OptModel<T>&, const std::vector<TripletRecord>&,           \
                                              const RetrievalTask&, std::size_t);                              \
  template std::vector<double> pooled_features(const OptModel<T>&, const TripletRecord&, const ModalitySet&);  \
  template ProbeResult linear_probe(const OptModel<T>&, const std::vector<TripletRecord>&,                     \
                                    const std::vector<TripletRecord>&, const ModalitySet&, const EvalOptions&); \
  template std::vector<int> describe(const OptModel<T>&, const TripletRecord&, const ModalitySet&,             \
                                     const GenerationParams&);                                                 \
  template CodeGrid imagine(const OptModel<T>&, std::span<const int>, const GenerationParams&);                 \
  template TextResult evaluate_text(const OptModel<T>&, const std::vector<TripletRecord>&, const ModalitySet&, \
                                    std::size_t, const Vocabulary&, const GenerationParams&);                  \
  template std::vector<MetricReport> evaluate_retrieval_suite(const OptModel<T>&,                              \
                                                              const std::vector<TripletRecord>&,               \
                                                              const EvalOptions&);                             \
  template std::vector<MetricReport> evaluate_probe_suite(const OptModel<T>&, const std::vector<TripletRecord>&, \
                                                          const std::vector<TripletRecord>&, const EvalOptions&); \
  template std::vector<MetricReport> evaluate_text_suite(const OptModel<T>&, const std::vector<TripletRecord>&, \
                                                         const Vocabulary&, const EvalOptions&);

OMNIPT_INSTANTIATE_EVAL(float)
OMNIPT_INSTANTIATE_EVAL(double)

}  // namespace omnipt
