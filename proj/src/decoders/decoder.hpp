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
#include <span>
#include <string>
#include <vector>

#include "encoder/attention.hpp"

namespace omnipt {

template <typename T>
struct DecoderBlock {
  LayerNormParams<T> ln_self;
  MultiHeadAttention<T> self_attention;
  LayerNormParams<T> ln_cross;
  MultiHeadAttention<T> cross_attention;
  LayerNormParams<T> ln_ffn;
  FeedForward<T> ffn;
};

// Autoregressive transformer decoder reading the encoder output through
// cross-attention. Used for text (DTR, captioning, recognition) and for image
// code sequences (DIR, text-to-image).
template <typename T>
struct TransformerDecoder {
  Tensor<T> token_table;     // input_vocab x d_h
  Tensor<T> position_table;  // max_len x d_h
  std::vector<DecoderBlock<T>> blocks;
  LayerNormParams<T> final_ln;
  Tensor<T> out_w, out_b;  // d_h x output_vocab
  int bos_id = 0;
  int eos_id = -1;  // -1: fixed-length sequences
  std::size_t max_len = 0;

  std::size_t output_vocab() const { return out_w.cols(); }

  static TransformerDecoder create(ParameterSet<T>& params, const std::string& prefix,
                                   const ModelConfig& config, std::size_t input_vocab,
                                   std::size_t output_vocab, std::size_t max_len, int bos_id,
                                   int eos_id, std::mt19937_64& rng);
};

// Encoder output together with which of its rows are real positions.
template <typename T>
struct DecoderMemory {
  Tensor<T> encoded;
  std::vector<std::uint8_t> valid;
};

// Teacher-forced logits [inputs x output_vocab] under a causal mask.
template <typename T>
Tensor<T> decoder_logits(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                         std::span<const int> inputs, const ForwardContext& ctx);

// Mean NLL of target_text followed by [EOS], fed [BOS]-shifted.
template <typename T>
Tensor<T> dtr_loss(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                   std::span<const int> target_text, const ForwardContext& ctx);

// Mean NLL of the row-major code sequence, fed [BOS]-shifted.
template <typename T>
Tensor<T> dir_loss(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                   std::span<const int> target_codes, const ForwardContext& ctx);

struct GenerationParams {
  std::size_t max_len = 32;
  int top_k = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

// Temperature-scaled logits truncated to the top k (ties to the lower index)
// and renormalized. top_k == 1 is greedy and consumes no randomness.
int sample_top_k(std::span<const double> logits, int top_k, double temperature,
                 std::mt19937_64& rng);

// Stops after [EOS] (not emitted) or max_len tokens.
template <typename T>
std::vector<int> generate_text(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                               const GenerationParams& gen);

// Exactly `count` codes, left to right.
template <typename T>
std::vector<int> generate_image_codes(const TransformerDecoder<T>& decoder,
                                      const DecoderMemory<T>& memory, std::size_t count,
                                      const GenerationParams& gen);

// Incremental decoding state: cross-attention keys/values are projected once,
// self-attention keys/values grow by one row per step.
template <typename T>
class DecodingCache {
 public:
  DecodingCache(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory);
  // Feeds the next input token; returns next-token logits.
  std::vector<double> step(int token);
  std::size_t position() const { return position_; }

 private:
  const TransformerDecoder<T>& decoder_;
  std::vector<std::uint8_t> memory_valid_;
  std::vector<KeyValue<T>> cross_;
  std::vector<KeyValue<T>> self_;
  std::size_t position_ = 0;
};

}  // namespace omnipt
