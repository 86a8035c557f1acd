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
#include <random>

#include "data/batch.hpp"
#include "decoders/decoder.hpp"
#include "frontends/embedders.hpp"
#include "losses/pretext_losses.hpp"

namespace omnipt {

// Every learnable component of the tri-modal model.
template <typename T>
struct OptModel {
  ModelConfig config;
  ParameterSet<T> params;
  TextEmbedder<T> text;
  VisionEmbedder<T> vision;
  AudioEmbedder<T> audio;
  CrossEncoder<T> encoder;
  TaskHeads<T> heads;
  TransformerDecoder<T> text_decoder;   // vocab in, vocab out
  TransformerDecoder<T> image_decoder;  // codebook + [BOS] in, codebook out

  static OptModel create(const ModelConfig& config, std::uint64_t seed);
};

template <typename T>
struct EncodedSample {
  JointSequence<T> sequence;
  Tensor<T> encoded;
  DecoderMemory<T> memory() const { return {encoded, sequence.attention_mask}; }
};

// Embeds the non-dropped modalities of one sample and runs the encoder.
template <typename T>
EncodedSample<T> encode_sample(const OptModel<T>& model, const BatchSample& sample,
                               const ModalityMaskPlan& drop, const ForwardContext& ctx);

// Per-task losses averaged over the batch's samples, then aggregated.
template <typename T>
LossBundle<T> batch_losses(const OptModel<T>& model, const Batch& batch, const LossWeights& weights,
                           const ForwardContext& ctx);

// A record's own modalities without padding.
BatchSample sample_from_record(const TripletRecord& record);

}  // namespace omnipt
