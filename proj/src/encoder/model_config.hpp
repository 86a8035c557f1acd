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

#include <string>

namespace omnipt {

// Shapes of every learnable component. desk() is the CPU-scale default;
// full_size() records the full-size preset and is never trained here.
struct ModelConfig {
  int d_h = 64;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_mult = 4;
  int decoder_layers = 2;
  int vocab_size = 0;
  int max_text_len = 24;
  int max_regions = 8;
  int max_audio_len = 48;
  int d_v = 64;
  int d_a = 32;
  int n_classes = 32;
  double dropout_rate = 0.1;
  double ln_epsilon = 1e-5;
  int codebook_size = 128;
  int code_grid = 4;
  int image_size = 32;

  int head_dim() const { return d_h / n_heads; }
  int code_count() const { return code_grid * code_grid; }
  // Decoder text positions cover the caption plus [EOS].
  int max_decode_len() const { return max_text_len + 1; }

  void validate() const;

  static ModelConfig desk();
  static ModelConfig full_size();
};

}  // namespace omnipt
