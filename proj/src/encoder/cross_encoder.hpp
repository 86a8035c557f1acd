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
#include <vector>

#include "encoder/attention.hpp"
#include "masking/masking.hpp"

namespace omnipt {

enum class Segment : std::uint8_t { kCls = 0, kText = 1, kVision = 2, kAudio = 3 };
inline constexpr std::size_t kSegmentCount = 4;

struct SequenceSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
  bool empty() const { return length == 0; }
};

// Embedded rows of one modality. Rows at index >= valid are padding: they
// sit in the sequence but are masked out of attention.
template <typename T>
struct ModalityEmbedding {
  Tensor<T> rows;
  std::size_t valid = 0;

  bool present() const { return rows.defined(); }
};

// [CLS; T; V; A] with per-position segment ids and attention validity.
template <typename T>
struct JointSequence {
  Tensor<T> embeddings;
  std::vector<Segment> segment_ids;
  std::vector<std::uint8_t> attention_mask;
  SequenceSpan text;
  SequenceSpan vision;
  SequenceSpan audio;

  std::size_t length() const { return segment_ids.size(); }
  const SequenceSpan& span(Modality m) const {
    return m == Modality::kText ? text : (m == Modality::kVision ? vision : audio);
  }
};

template <typename T>
struct EncoderBlock {
  LayerNormParams<T> ln_attention;
  MultiHeadAttention<T> attention;
  LayerNormParams<T> ln_ffn;
  FeedForward<T> ffn;
};

template <typename T>
struct CrossEncoder {
  Tensor<T> cls_embedding;  // 1 x d_h
  Tensor<T> segment_table;  // 4 x d_h
  std::vector<EncoderBlock<T>> blocks;
  LayerNormParams<T> final_ln;

  static CrossEncoder create(ParameterSet<T>& params, const ModelConfig& config,
                             std::mt19937_64& rng);
};

// Concatenates the present, non-dropped modalities after a learned [CLS] row
// and adds segment embeddings. Throws ContractError when nothing remains.
template <typename T>
JointSequence<T> assemble(const CrossEncoder<T>& encoder, const ModalityEmbedding<T>& text,
                          const ModalityEmbedding<T>& vision, const ModalityEmbedding<T>& audio,
                          const ModalityMaskPlan& modality_mask);

// Pre-LN transformer stack. Positions with attention_mask == 0 neither attend
// nor are attended to. `attention_out`, when given, receives every head's
// weight matrix, layer by layer.
template <typename T>
Tensor<T> encode(const CrossEncoder<T>& encoder, const JointSequence<T>& sequence,
                 const ForwardContext& ctx, std::vector<Tensor<T>>* attention_out = nullptr);

template <typename T>
Tensor<T> cls_state(const Tensor<T>& encoded);

}  // namespace omnipt
