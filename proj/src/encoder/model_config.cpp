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

#include "encoder/model_config.hpp"

#include "common/error.hpp"

namespace omnipt {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("model config: ") + name + " must be positive");
  };
  positive(d_h, "d_h");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(ffn_mult, "ffn_mult");
  positive(decoder_layers, "decoder_layers");
  positive(vocab_size, "vocab_size");
  positive(max_text_len, "max_text_len");
  positive(max_regions, "max_regions");
  positive(max_audio_len, "max_audio_len");
  positive(d_v, "d_v");
  positive(d_a, "d_a");
  positive(n_classes, "n_classes");
  positive(codebook_size, "codebook_size");
  positive(code_grid, "code_grid");
  positive(image_size, "image_size");
  if (d_h % n_heads != 0) throw ConfigError("model config: d_h must be divisible by n_heads");
  if (image_size % code_grid != 0) {
    throw ConfigError("model config: image_size must be divisible by code_grid");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("model config: dropout must be in [0, 1)");
  }
  if (ln_epsilon <= 0.0) throw ConfigError("model config: ln_epsilon must be positive");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full_size() {
  ModelConfig c;
  c.d_h = 768;
  c.n_layers = 12;
  c.n_heads = 12;
  c.decoder_layers = 6;
  c.max_regions = 100;
  c.d_v = 2048;
  c.d_a = 768;
  c.codebook_size = 8192;
  c.code_grid = 8;
  c.image_size = 64;
  return c;
}

}  // namespace omnipt
