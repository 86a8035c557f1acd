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

#include "decoders/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace omnipt {

template <typename T>
TransformerDecoder<T> TransformerDecoder<T>::create(ParameterSet<T>& params,
                                                    const std::string& prefix,
                                                    const ModelConfig& config,
                                                    std::size_t input_vocab,
                                                    std::size_t output_vocab, std::size_t max_len,
                                                    int bos_id, int eos_id, std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  TransformerDecoder dec;
  dec.token_table = params.add_normal(prefix + ".token_emb", {input_vocab, d}, rng);
  dec.position_table = params.add_normal(prefix + ".pos_emb", {max_len, d}, rng);
  for (int l = 0; l < config.decoder_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    DecoderBlock<T> b;
    b.ln_self = LayerNormParams<T>::create(params, p + ".ln_self", config);
    b.self_attention = MultiHeadAttention<T>::create(params, p + ".self_attn", config, rng);
    b.ln_cross = LayerNormParams<T>::create(params, p + ".ln_cross", config);
    b.cross_attention = MultiHeadAttention<T>::create(params, p + ".cross_attn", config, rng);
    b.ln_ffn = LayerNormParams<T>::create(params, p + ".ln_ffn", config);
    b.ffn = FeedForward<T>::create(params, p + ".ffn", config, rng);
    dec.blocks.push_back(std::move(b));
  }
  dec.final_ln = LayerNormParams<T>::create(params, prefix + ".final_ln", config);
  dec.out_w = params.add_normal(prefix + ".out.w", {d, output_vocab}, rng);
  dec.out_b = params.add_zeros(prefix + ".out.b", {output_vocab});
  dec.bos_id = bos_id;
  dec.eos_id = eos_id;
  dec.max_len = max_len;
  return dec;
}

namespace {

template <typename T>
Tensor<T> embed_inputs(const TransformerDecoder<T>& decoder, std::span<const int> inputs,
                       std::size_t first_position) {
  if (first_position + inputs.size() > decoder.max_len) {
    throw ValidationError("decoder: sequence of " + std::to_string(first_position + inputs.size()) +
                          " exceeds max length " + std::to_string(decoder.max_len));
  }
  std::vector<std::size_t> pos(inputs.size());
  std::iota(pos.begin(), pos.end(), first_position);
  return add(embedding(decoder.token_table, inputs),
             gather_rows(decoder.position_table, std::span<const std::size_t>(pos)));
}

template <typename T>
Tensor<T> shifted_nll(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                      std::span<const int> targets, const ForwardContext& ctx) {
  std::vector<int> inputs{decoder.bos_id};
  inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
  const auto logits = decoder_logits(decoder, memory, std::span<const int>(inputs), ctx);
  std::vector<std::size_t> index(targets.begin(), targets.end());
  return scale(mean(pick(log_softmax(logits), std::span<const std::size_t>(index))), T{-1});
}

}  // namespace

template <typename T>
Tensor<T> decoder_logits(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                         std::span<const int> inputs, const ForwardContext& ctx) {
  if (inputs.empty()) throw ValidationError("decoder: empty input sequence");
  if (memory.valid.size() != memory.encoded.rows()) {
    throw ContractError("decoder: memory validity does not match encoder rows");
  }
  const auto self_mask = causal_mask(inputs.size());
  const auto memory_mask = cross_mask(inputs.size(), memory.valid);
  auto x = ctx.drop(embed_inputs(decoder, inputs, 0));
  for (const auto& block : decoder.blocks) {
    const auto h = block.ln_self(x);
    x = add(x, ctx.drop(block.self_attention.forward(h, h, self_mask)));
    x = add(x, ctx.drop(block.cross_attention.forward(block.ln_cross(x), memory.encoded,
                                                      memory_mask)));
    x = add(x, ctx.drop(block.ffn.forward(block.ln_ffn(x), ctx)));
  }
  return linear(decoder.final_ln(x), decoder.out_w, decoder.out_b);
}

template <typename T>
Tensor<T> dtr_loss(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                   std::span<const int> target_text, const ForwardContext& ctx) {
  if (target_text.empty()) throw ValidationError("dtr_loss: empty target text");
  const auto vocab = static_cast<int>(decoder.output_vocab());
  for (int id : target_text) {
    if (id < 0 || id >= vocab) throw ValidationError("dtr_loss: token id out of range");
  }
  std::vector<int> targets(target_text.begin(), target_text.end());
  targets.push_back(decoder.eos_id);
  return shifted_nll(decoder, memory, std::span<const int>(targets), ctx);
}

template <typename T>
Tensor<T> dir_loss(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                   std::span<const int> target_codes, const ForwardContext& ctx) {
  if (target_codes.empty()) throw ValidationError("dir_loss: empty code sequence");
  const auto codebook = static_cast<int>(decoder.output_vocab());
  for (int id : target_codes) {
    if (id < 0 || id >= codebook) {
      throw ValidationError("dir_loss: code id " + std::to_string(id) + " >= codebook_size " +
                            std::to_string(codebook));
    }
  }
  return shifted_nll(decoder, memory, target_codes, ctx);
}

int sample_top_k(std::span<const double> logits, int top_k, double temperature,
                 std::mt19937_64& rng) {
  if (logits.empty()) throw ValidationError("sample_top_k: empty distribution");
  if (top_k < 1 || static_cast<std::size_t>(top_k) > logits.size()) {
    throw ValidationError("sample_top_k: top_k must be in [1, " + std::to_string(logits.size()) + "]");
  }
  if (!(temperature > 0.0)) throw ValidationError("sample_top_k: temperature must be positive");
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  if (top_k == 1) return static_cast<int>(order.front());
  std::vector<double> weights(static_cast<std::size_t>(top_k));
  const double top = logits[order[0]] / temperature;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = std::exp(logits[order[i]] / temperature - top);
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return static_cast<int>(order[pick(rng)]);
}

template <typename T>
DecodingCache<T>::DecodingCache(const TransformerDecoder<T>& decoder,
                                const DecoderMemory<T>& memory)
    : decoder_(decoder), memory_valid_(memory.valid) {
  NoGradGuard no_grad;
  for (const auto& block : decoder.blocks) {
    cross_.push_back(block.cross_attention.project(memory.encoded));
  }
  self_.resize(decoder.blocks.size());
}

template <typename T>
std::vector<double> DecodingCache<T>::step(int token) {
  NoGradGuard no_grad;
  const int ids[1] = {token};
  auto x = embed_inputs(decoder_, std::span<const int>(ids), position_);
  const std::vector<std::uint8_t> all_self(position_ + 1, 1);
  for (std::size_t l = 0; l < decoder_.blocks.size(); ++l) {
    const auto& block = decoder_.blocks[l];
    const auto h = block.ln_self(x);
    auto kv = block.self_attention.project(h);
    auto& cache = self_[l];
    if (cache.keys.defined()) {
      cache.keys = concat_rows(std::vector<Tensor<T>>{cache.keys, kv.keys});
      cache.values = concat_rows(std::vector<Tensor<T>>{cache.values, kv.values});
    } else {
      cache = kv;
    }
    x = add(x, block.self_attention.attend(h, cache, all_self));
    x = add(x, block.cross_attention.attend(block.ln_cross(x), cross_[l], memory_valid_));
    x = add(x, block.ffn.forward(block.ln_ffn(x), ForwardContext::eval()));
  }
  ++position_;
  const auto logits = linear(decoder_.final_ln(x), decoder_.out_w, decoder_.out_b);
  return std::vector<double>(logits.data().begin(), logits.data().end());
}

template <typename T>
std::vector<int> generate_text(const TransformerDecoder<T>& decoder, const DecoderMemory<T>& memory,
                               const GenerationParams& gen) {
  std::mt19937_64 rng(gen.seed);
  DecodingCache<T> cache(decoder, memory);
  std::vector<int> out;
  int token = decoder.bos_id;
  const std::size_t limit = std::min(gen.max_len, decoder.max_len);
  while (out.size() < limit) {
    const auto logits = cache.step(token);
    token = sample_top_k(logits, gen.top_k, gen.temperature, rng);
    if (token == decoder.eos_id) break;
    out.push_back(token);
  }
  return out;
}

template <typename T>
std::vector<int> generate_image_codes(const TransformerDecoder<T>& decoder,
                                      const DecoderMemory<T>& memory, std::size_t count,
                                      const GenerationParams& gen) {
  if (count > decoder.max_len) throw ValidationError("generate_image_codes: count exceeds max length");
  std::mt19937_64 rng(gen.seed);
  DecodingCache<T> cache(decoder, memory);
  std::vector<int> out;
  int token = decoder.bos_id;
  while (out.size() < count) {
    const auto logits = cache.step(token);
    token = sample_top_k(logits, gen.top_k, gen.temperature, rng);
    out.push_back(token);
  }
  return out;
}

#define OMNIPT_INSTANTIATE_DECODER(T)                                                          \
  template struct TransformerDecoder<T>;                                                       \
  template class DecodingCache<T>;                                                             \
  template Tensor<T> decoder_logits(const TransformerDecoder<T>&, const DecoderMemory<T>&,     \
                                    std::span<const int>, const ForwardContext&);              \
  template Tensor<T> dtr_loss(const TransformerDecoder<T>&, const DecoderMemory<T>&,           \
                              std::span<const int>, const ForwardContext&);                    \
  template Tensor<T> dir_loss(const TransformerDecoder<T>&, const DecoderMemory<T>&,           \
                              std::span<const int>, const ForwardContext&);                    \
  template std::vector<int> generate_text(const TransformerDecoder<T>&,                        \
                                          const DecoderMemory<T>&, const GenerationParams&);   \
  template std::vector<int> generate_image_codes(const TransformerDecoder<T>&,                 \
                                                 const DecoderMemory<T>&, std::size_t,         \
                                                 const GenerationParams&);

OMNIPT_INSTANTIATE_DECODER(float)
OMNIPT_INSTANTIATE_DECODER(double)

}  // namespace omnipt
