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
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "common/image.hpp"
#include "io/archive.hpp"
#include "numerics/adam.hpp"
#include "numerics/ops.hpp"

namespace omnipt {

struct CodecConfig {
  int image_size = 32;
  int code_grid = 4;
  int codebook_size = 128;
  int code_dim = 32;
  int hidden = 256;
  double tau_start = 1.0;
  double tau_floor = 1.0 / 16.0;
  double learning_rate = 2e-3;
  int batch_size = 16;
  // Weight of the negative entropy of the batch-averaged code distribution.
  // Without it training settles on one code per color.
  double diversity_weight = 0.1;
  // Forward the hard one-hot (straight-through) instead of the relaxed code.
  bool straight_through = false;
  std::uint64_t seed = 0;

  int cell_size() const { return image_size / code_grid; }
  int patch_values() const { return cell_size() * cell_size() * kImageChannels; }
  int code_count() const { return code_grid * code_grid; }
  void validate() const;
};

// code_grid x code_grid ids, row-major.
struct CodeGrid {
  int grid = 0;
  std::vector<int> ids;
  friend bool operator==(const CodeGrid&, const CodeGrid&) = default;
};

// Discrete autoencoder over non-overlapping image cells: a per-cell MLP
// (a stride-cell convolution) produces codebook logits, a code embedding and
// a second MLP map the chosen code back to the cell's pixels.
template <typename T>
struct ImageCodec {
  CodecConfig config;
  ParameterSet<T> params;
  Tensor<T> enc_w1, enc_b1, enc_w2, enc_b2;
  Tensor<T> codebook;  // codebook_size x code_dim
  Tensor<T> dec_w1, dec_b1, dec_w2, dec_b2;

  static ImageCodec create(const CodecConfig& config);
};

// Geometric interpolation from tau_start at step 0 to tau_floor at the last step.
double gumbel_temperature(const CodecConfig& config, std::size_t step, std::size_t total_steps);

// Cells of every image stacked as rows [images * cells x patch_values].
template <typename T>
Tensor<T> extract_patches(const CodecConfig& config, std::span<const Image> images);

template <typename T>
Tensor<T> codebook_logits(const ImageCodec<T>& codec, const Tensor<T>& patches);
template <typename T>
Tensor<T> decode_patches(const ImageCodec<T>& codec, const Tensor<T>& onehot);

template <typename T>
struct CodecLoss {
  Tensor<T> total;  // mse + diversity_weight * (negative code entropy)
  double mse = 0.0;
};

// One relaxed training forward: Gumbel noise, temperature, relaxed (or hard
// straight-through) codes, reconstruction.
template <typename T>
CodecLoss<T> codec_loss(const ImageCodec<T>& codec, std::span<const Image> images, double temperature,
                     std::mt19937_64& rng);

struct CodecEpoch {
  int epoch = 0;
  double train_mse = 0.0;
  double temperature = 0.0;
};

struct CodecTrainResult {
  std::vector<CodecEpoch> epochs;
  bool diverged = false;
  std::string message;
};

// Minibatch Adam on the reconstruction error. On a non-finite loss the
// parameters of the last finished epoch are restored and training stops.
template <typename T>
CodecTrainResult codec_train(ImageCodec<T>& codec, std::span<const Image> images, int epochs);

// Eval mode: argmax codes, no noise.
template <typename T>
CodeGrid encode_to_codes(const ImageCodec<T>& codec, const Image& image);
template <typename T>
Image decode_from_codes(const ImageCodec<T>& codec, const CodeGrid& codes);

template <typename T>
double reconstruction_mse(const ImageCodec<T>& codec, std::span<const Image> images);
// Fraction of the codebook chosen at least once over the images.
template <typename T>
double codebook_usage(const ImageCodec<T>& codec, std::span<const Image> images);

template <typename T>
void save_codec(const ImageCodec<T>& codec, const std::filesystem::path& path);
template <typename T>
ImageCodec<T> load_codec(const std::filesystem::path& path);

}  // namespace omnipt
