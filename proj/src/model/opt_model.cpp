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

#include "model/opt_model.hpp"

namespace omnipt {

template <typename T>
OptModel<T> OptModel<T>::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  OptModel m;
  m.config = config;
  m.text = TextEmbedder<T>::create(m.params, config, rng);
  m.vision = VisionEmbedder<T>::create(m.params, config, rng);
  m.audio = AudioEmbedder<T>::create(m.params, config, rng);
  m.encoder = CrossEncoder<T>::create(m.params, config, rng);
  m.heads = TaskHeads<T>::create(m.params, config, rng);
  const auto vocab = static_cast<std::size_t>(config.vocab_size);
  const auto codebook = static_cast<std::size_t>(config.codebook_size);
  m.text_decoder = TransformerDecoder<T>::create(
      m.params, "text_decoder", config, vocab, vocab,
      static_cast<std::size_t>(config.max_decode_len()), Vocabulary::kBos, Vocabulary::kEos, rng);
  m.image_decoder = TransformerDecoder<T>::create(
      m.params, "image_decoder", config, codebook + 1, codebook,
      static_cast<std::size_t>(config.code_count()), config.codebook_size, -1, rng);
  return m;
}

template <typename T>
EncodedSample<T> encode_sample(const OptModel<T>& model, const BatchSample& sample,
                               const ModalityMaskPlan& drop, const ForwardContext& ctx) {
  ModalityEmbedding<T> text, vision, audio;
  if (!drop.drop_text && !sample.text.empty()) {
    text = {embed_text(model.text, std::span<const int>(sample.text)), sample.text_valid};
  }
  if (!drop.drop_vision && !sample.regions.empty()) {
    vision = {embed_vision(model.vision, sample.regions, sample.locations), sample.region_valid};
  }
  if (!drop.drop_audio && !sample.audio.empty()) {
    audio = {embed_audio(model.audio, sample.audio), sample.audio_valid};
  }
  EncodedSample<T> out;
  out.sequence = assemble(model.encoder, text, vision, audio, drop);
  out.encoded = encode(model.encoder, out.sequence, ctx);
  return out;
}

namespace {

template <typename T>
void accumulate(Tensor<T>& total, const Tensor<T>& term) {
  total = total.defined() ? add(total, term) : term;
}

template <typename T>
Tensor<T> averaged(const Tensor<T>& total, std::size_t count) {
  return scale(total, static_cast<T>(1.0 / static_cast<double>(count)));
}

}  // namespace

template <typename T>
LossBundle<T> batch_losses(const OptModel<T>& model, const Batch& batch, const LossWeights& weights,
                           const ForwardContext& ctx) {
  batch.check_consistent();
  LossParts<T> parts;
  auto part = [&](LossTerm t) -> Tensor<T>& { return parts[static_cast<std::size_t>(t)]; };
  std::size_t nce_count = 0;
  const ModalityMaskPlan keep_all;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& sample = batch.samples[s];
    const bool uses_drop = batch.task == Task::kDtr || batch.task == Task::kDir;
    const auto enc = encode_sample(model, sample, uses_drop ? batch.modality_plans[s] : keep_all, ctx);
    switch (batch.task) {
      case Task::kMlm:
        accumulate(part(LossTerm::kMlm),
                   mlm_loss(enc.encoded, enc.sequence, batch.token_plans[s],
                            std::span<const int>(batch.text_targets[s]), model.heads));
        break;
      case Task::kMvm:
        accumulate(part(LossTerm::kMvfr), mvfr_loss(enc.encoded, enc.sequence, batch.token_plans[s],
                                                    batch.feature_targets[s], model.heads));
        accumulate(part(LossTerm::kMrc),
                   mrc_loss(enc.encoded, enc.sequence, batch.token_plans[s],
                            std::span<const int>(batch.region_labels[s]), model.heads));
        break;
      case Task::kMam: {
        accumulate(part(LossTerm::kMafr), mafr_loss(enc.encoded, enc.sequence, batch.token_plans[s],
                                                    batch.feature_targets[s], model.heads));
        auto nce = mam_nce_loss(enc.encoded, enc.sequence, batch.token_plans[s],
                                batch.audio_originals[s], model.heads);
        if (nce) {
          accumulate(part(LossTerm::kMamNce), *nce);
          ++nce_count;
        }
        break;
      }
      case Task::kDtr:
        accumulate(part(LossTerm::kDtr),
                   dtr_loss(model.text_decoder, enc.memory(),
                            std::span<const int>(batch.caption_targets[s]), ctx));
        break;
      case Task::kDir:
        accumulate(part(LossTerm::kDir),
                   dir_loss(model.image_decoder, enc.memory(),
                            std::span<const int>(batch.code_targets[s]), ctx));
        break;
      case Task::kSm:
        accumulate(part(LossTerm::kSm),
                   sm_loss(cls_state(enc.encoded), batch.corruption[s].label, model.heads));
        break;
    }
  }
  for (std::size_t t = 0; t < kLossTermCount; ++t) {
    if (!parts[t].defined()) continue;
    const bool nce = t == static_cast<std::size_t>(LossTerm::kMamNce);
    parts[t] = averaged(parts[t], nce ? nce_count : batch.size());
  }
  return aggregate(parts, weights);
}

BatchSample sample_from_record(const TripletRecord& record) {
  BatchSample s;
  s.text = record.token_ids;
  s.text_valid = s.text.size();
  s.regions = record.regions.features;
  s.locations = record.regions.locations;
  s.region_valid = record.regions.count();
  s.audio = record.audio.features;
  s.audio_valid = record.audio.count();
  return s;
}

#define OMNIPT_INSTANTIATE_MODEL(T)                                                         \
  template struct OptModel<T>;                                                              \
  template EncodedSample<T> encode_sample(const OptModel<T>&, const BatchSample&,           \
                                          const ModalityMaskPlan&, const ForwardContext&);  \
  template LossBundle<T> batch_losses(const OptModel<T>&, const Batch&, const LossWeights&, \
                                      const ForwardContext&);

OMNIPT_INSTANTIATE_MODEL(float)
OMNIPT_INSTANTIATE_MODEL(double)

}  // namespace omnipt
