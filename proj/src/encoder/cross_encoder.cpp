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

#include "encoder/cross_encoder.hpp"

namespace omnipt {

template <typename T>
CrossEncoder<T> CrossEncoder<T>::create(ParameterSet<T>& params, const ModelConfig& config,
                                        std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(config.d_h);
  CrossEncoder e;
  e.cls_embedding = params.add_normal("encoder.cls", {1, d}, rng);
  e.segment_table = params.add_normal("encoder.segment_emb", {kSegmentCount, d}, rng);
  for (int l = 0; l < config.n_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l);
    EncoderBlock<T> block;
    block.ln_attention = LayerNormParams<T>::create(params, p + ".ln1", config);
    block.attention = MultiHeadAttention<T>::create(params, p + ".attn", config, rng);
    block.ln_ffn = LayerNormParams<T>::create(params, p + ".ln2", config);
    block.ffn = FeedForward<T>::create(params, p + ".ffn", config, rng);
    e.blocks.push_back(std::move(block));
  }
  e.final_ln = LayerNormParams<T>::create(params, "encoder.final_ln", config);
  return e;
}

template <typename T>
JointSequence<T> assemble(const CrossEncoder<T>& encoder, const ModalityEmbedding<T>& text,
                          const ModalityEmbedding<T>& vision, const ModalityEmbedding<T>& audio,
                          const ModalityMaskPlan& modality_mask) {
  JointSequence<T> seq;
  std::vector<Tensor<T>> parts{encoder.cls_embedding};
  seq.segment_ids.push_back(Segment::kCls);
  seq.attention_mask.push_back(1);
  const std::size_t width = encoder.cls_embedding.cols();

  auto append = [&](const ModalityEmbedding<T>& m, bool dropped, Segment segment,
                    SequenceSpan& span) {
    span.offset = seq.segment_ids.size();
    span.length = 0;
    if (dropped || !m.present()) return;
    if (m.rows.cols() != width) {
      throw DimensionError("assemble: modality width " + std::to_string(m.rows.cols()) +
                           " != d_h " + std::to_string(width));
    }
    if (m.valid == 0 || m.valid > m.rows.rows()) {
      throw ContractError("assemble: valid length must be in [1, rows]");
    }
    parts.push_back(m.rows);
    span.length = m.rows.rows();
    for (std::size_t i = 0; i < span.length; ++i) {
      seq.segment_ids.push_back(segment);
      seq.attention_mask.push_back(i < m.valid ? 1 : 0);
    }
  };
  append(text, modality_mask.drop_text, Segment::kText, seq.text);
  append(vision, modality_mask.drop_vision, Segment::kVision, seq.vision);
  append(audio, modality_mask.drop_audio, Segment::kAudio, seq.audio);
  if (parts.size() == 1) {
    throw ContractError("assemble: every modality is dropped or absent");
  }

  std::vector<int> segment_index(seq.segment_ids.size());
  for (std::size_t i = 0; i < segment_index.size(); ++i) {
    segment_index[i] = static_cast<int>(seq.segment_ids[i]);
  }
  seq.embeddings = add(concat_rows(parts),
                       embedding(encoder.segment_table, std::span<const int>(segment_index)));
  return seq;
}

template <typename T>
Tensor<T> encode(const CrossEncoder<T>& encoder, const JointSequence<T>& sequence,
                 const ForwardContext& ctx, std::vector<Tensor<T>>* attention_out) {
  const auto allowed = padding_mask(sequence.attention_mask);
  auto x = ctx.drop(sequence.embeddings);
  for (const auto& block : encoder.blocks) {
    const auto normed = block.ln_attention(x);
    auto attended = block.attention.forward(normed, normed, allowed, attention_out);
    x = add(x, ctx.drop(attended));
    x = add(x, ctx.drop(block.ffn.forward(block.ln_ffn(x), ctx)));
  }
  return encoder.final_ln(x);
}

template <typename T>
Tensor<T> cls_state(const Tensor<T>& encoded) {
  return slice_rows(encoded, 0, 1);
}

#define OMNIPT_INSTANTIATE_ENCODER(T)                                                   \
  template struct CrossEncoder<T>;                                                      \
  template JointSequence<T> assemble(const CrossEncoder<T>&, const ModalityEmbedding<T>&, \
                                     const ModalityEmbedding<T>&,                       \
                                     const ModalityEmbedding<T>&, const ModalityMaskPlan&); \
  template Tensor<T> encode(const CrossEncoder<T>&, const JointSequence<T>&,            \
                            const ForwardContext&, std::vector<Tensor<T>>*);            \
  template Tensor<T> cls_state(const Tensor<T>&);

OMNIPT_INSTANTIATE_ENCODER(float)
OMNIPT_INSTANTIATE_ENCODER(double)

}  // namespace omnipt
