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

#include "codec/image_codec.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>

namespace omnipt {

void CodecConfig::validate() const {
  if (image_size <= 0 || code_grid <= 0 || image_size % code_grid != 0) {
    throw ConfigError("codec: image_size " + std::to_string(image_size) +
                      " must be a positive multiple of code_grid " + std::to_string(code_grid));
  }
  if (codebook_size < 2 || code_dim <= 0 || hidden <= 0 || batch_size <= 0) {
    throw ConfigError("codec: codebook_size >= 2, code_dim, hidden, batch_size > 0 required");
  }
  if (!(tau_start > 0.0) || !(tau_floor > 0.0) || tau_floor > tau_start) {
    throw ConfigError("codec: need 0 < tau_floor <= tau_start");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("codec: learning_rate must be positive");
  if (!(diversity_weight >= 0.0)) throw ConfigError("codec: diversity_weight must be non-negative");
}

template <typename T>
ImageCodec<T> ImageCodec<T>::create(const CodecConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  ImageCodec codec;
  codec.config = config;
  const auto p = static_cast<std::size_t>(config.patch_values());
  const auto h = static_cast<std::size_t>(config.hidden);
  const auto k = static_cast<std::size_t>(config.codebook_size);
  const auto e = static_cast<std::size_t>(config.code_dim);
  auto& ps = codec.params;
  codec.enc_w1 = ps.add_normal("codec.enc.w1", {p, h}, rng, 1.0 / std::sqrt(double(p)));
  codec.enc_b1 = ps.add_zeros("codec.enc.b1", {h});
  codec.enc_w2 = ps.add_normal("codec.enc.w2", {h, k}, rng, 1.0 / std::sqrt(double(h)));
  codec.enc_b2 = ps.add_zeros("codec.enc.b2", {k});
  codec.codebook = ps.add_normal("codec.codebook", {k, e}, rng, 1.0);
  codec.dec_w1 = ps.add_normal("codec.dec.w1", {e, h}, rng, 1.0 / std::sqrt(double(e)));
  codec.dec_b1 = ps.add_zeros("codec.dec.b1", {h});
  codec.dec_w2 = ps.add_normal("codec.dec.w2", {h, p}, rng, 1.0 / std::sqrt(double(h)));
  codec.dec_b2 = ps.add_zeros("codec.dec.b2", {p});
  return codec;
}

double gumbel_temperature(const CodecConfig& config, std::size_t step, std::size_t total_steps) {
  if (total_steps <= 1) return config.tau_floor;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps - 1));
  return config.tau_start * std::pow(config.tau_floor / config.tau_start, frac);
}

template <typename T>
Tensor<T> extract_patches(const CodecConfig& config, std::span<const Image> images) {
  if (images.empty()) throw ValidationError("codec: no images");
  const int cell = config.cell_size();
  const int grid = config.code_grid;
  const auto width = static_cast<std::size_t>(config.patch_values());
  std::vector<T> data;
  data.reserve(images.size() * grid * grid * width);
  for (const auto& image : images) {
    if (image.size != config.image_size ||
        image.pixels.size() != static_cast<std::size_t>(image.size) * image.size * kImageChannels) {
      throw ValidationError("codec: expected a " + std::to_string(config.image_size) + "x" +
                            std::to_string(config.image_size) + " RGB image, got side " +
                            std::to_string(image.size));
    }
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        for (int y = 0; y < cell; ++y) {
          for (int x = 0; x < cell; ++x) {
            for (int c = 0; c < kImageChannels; ++c) {
              data.push_back(static_cast<T>(image.at(gy * cell + y, gx * cell + x, c)));
            }
          }
        }
      }
    }
  }
  return Tensor<T>::from_data({images.size() * grid * grid, width}, std::move(data));
}

template <typename T>
Tensor<T> codebook_logits(const ImageCodec<T>& codec, const Tensor<T>& patches) {
  return linear(gelu(linear(patches, codec.enc_w1, codec.enc_b1)), codec.enc_w2, codec.enc_b2);
}

template <typename T>
Tensor<T> decode_patches(const ImageCodec<T>& codec, const Tensor<T>& onehot) {
  const auto code = matmul(onehot, codec.codebook);
  return sigmoid(linear(gelu(linear(code, codec.dec_w1, codec.dec_b1)), codec.dec_w2, codec.dec_b2));
}

template <typename T>
CodecLoss<T> codec_loss(const ImageCodec<T>& codec, std::span<const Image> images, double temperature,
                        std::mt19937_64& rng) {
  const auto patches = extract_patches<T>(codec.config, images);
  const auto logits = codebook_logits(codec, patches);
  std::vector<T> noise(logits.numel());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto& g : noise) {
    double u = uniform(rng);
    while (u <= 0.0) u = uniform(rng);
    g = static_cast<T>(-std::log(-std::log(u)));
  }
  const auto perturbed = add(logits, Tensor<T>::from_data(logits.shape(), std::move(noise)));
  const auto soft = softmax(scale(perturbed, static_cast<T>(1.0 / temperature)), 1);
  const auto recon = decode_patches(codec, codec.config.straight_through ? straight_through_onehot(soft) : soft);
  const auto mse = scale(sum_squares(sub(recon, patches)), static_cast<T>(1.0 / patches.numel()));
  if (codec.config.diversity_weight == 0.0) return {mse, static_cast<double>(mse.item())};
  const auto n = logits.rows();
  const auto average = Tensor<T>::full({1, n}, static_cast<T>(1.0 / static_cast<double>(n)));
  const auto marginal = matmul(average, softmax(logits, 1));
  const auto neg_entropy = sum(mul(marginal, natural_log(marginal)));
  return {add(mse, scale(neg_entropy, static_cast<T>(codec.config.diversity_weight))),
          static_cast<double>(mse.item())};
}

template <typename T>
CodecTrainResult codec_train(ImageCodec<T>& codec, std::span<const Image> images, int epochs) {
  if (images.empty()) throw ValidationError("codec_train: no images");
  if (epochs <= 0) throw ValidationError("codec_train: epochs must be positive");
  const auto& cfg = codec.config;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState<T> adam;
  adam.learning_rate = cfg.learning_rate;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t per_epoch = (images.size() + batch - 1) / batch;
  const std::size_t total = per_epoch * static_cast<std::size_t>(epochs);

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<T>> good;
  auto snapshot = [&] {
    good.clear();
    for (const auto& p : codec.params.list()) good.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  };
  snapshot();

  CodecTrainResult result;
  std::size_t step = 0;
  std::vector<Image> chunk;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    double tau = cfg.tau_start;
    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      chunk.clear();
      for (std::size_t i = b * batch; i < std::min(images.size(), (b + 1) * batch); ++i) {
        chunk.push_back(images[order[i]]);
      }
      tau = gumbel_temperature(cfg, step, total);
      codec.params.zero_grad();
      const auto loss = codec_loss(codec, std::span<const Image>(chunk), tau, rng);
      const double value = loss.total.item();
      if (!std::isfinite(value)) {
        for (std::size_t i = 0; i < good.size(); ++i) {
          auto dst = codec.params.list()[i].tensor.data_mut();
          std::copy(good[i].begin(), good[i].end(), dst.begin());
        }
        result.diverged = true;
        result.message = "codec loss became non-finite in epoch " + std::to_string(epoch) +
                         "; restored parameters from epoch " + std::to_string(epoch - 1);
        return result;
      }
      loss.total.backward();
      adam_step(codec.params, adam);
      sum += loss.mse * static_cast<double>(chunk.size());
    }
    result.epochs.push_back({epoch, sum / static_cast<double>(images.size()), tau});
    snapshot();
  }
  return result;
}

template <typename T>
CodeGrid encode_to_codes(const ImageCodec<T>& codec, const Image& image) {
  NoGradGuard no_grad;
  const auto logits = codebook_logits(codec, extract_patches<T>(codec.config, std::span<const Image>(&image, 1)));
  CodeGrid grid{codec.config.code_grid, {}};
  const std::size_t k = logits.cols();
  const auto v = logits.data();
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = v.subspan(r * k, k);
    grid.ids.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return grid;
}

template <typename T>
Image decode_from_codes(const ImageCodec<T>& codec, const CodeGrid& codes) {
  const auto& cfg = codec.config;
  if (codes.grid != cfg.code_grid || codes.ids.size() != static_cast<std::size_t>(cfg.code_count())) {
    throw ValidationError("decode_from_codes: expected a " + std::to_string(cfg.code_grid) + "x" +
                          std::to_string(cfg.code_grid) + " grid");
  }
  const auto k = static_cast<std::size_t>(cfg.codebook_size);
  std::vector<T> onehot(codes.ids.size() * k, T{0});
  for (std::size_t i = 0; i < codes.ids.size(); ++i) {
    const int id = codes.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= k) {
      throw ValidationError("decode_from_codes: code id " + std::to_string(id) + " outside [0, " +
                            std::to_string(k) + ")");
    }
    onehot[i * k + static_cast<std::size_t>(id)] = T{1};
  }
  NoGradGuard no_grad;
  const auto patches = decode_patches(codec, Tensor<T>::from_data({codes.ids.size(), k}, std::move(onehot)));
  Image image(cfg.image_size);
  const int cell = cfg.cell_size();
  const auto v = patches.data();
  std::size_t idx = 0;
  for (int gy = 0; gy < cfg.code_grid; ++gy) {
    for (int gx = 0; gx < cfg.code_grid; ++gx) {
      for (int y = 0; y < cell; ++y) {
        for (int x = 0; x < cell; ++x) {
          for (int c = 0; c < kImageChannels; ++c) {
            image.at(gy * cell + y, gx * cell + x, c) =
                std::clamp(static_cast<float>(v[idx++]), 0.0f, 1.0f);
          }
        }
      }
    }
  }
  return image;
}

template <typename T>
double reconstruction_mse(const ImageCodec<T>& codec, std::span<const Image> images) {
  if (images.empty()) throw ValidationError("reconstruction_mse: no images");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& image : images) {
    const auto recon = decode_from_codes(codec, encode_to_codes(codec, image));
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      const double d = static_cast<double>(recon.pixels[i]) - image.pixels[i];
      total += d * d;
    }
    count += image.pixels.size();
  }
  return total / static_cast<double>(count);
}

template <typename T>
double codebook_usage(const ImageCodec<T>& codec, std::span<const Image> images) {
  std::vector<bool> used(static_cast<std::size_t>(codec.config.codebook_size), false);
  for (const auto& image : images) {
    for (int id : encode_to_codes(codec, image).ids) used[static_cast<std::size_t>(id)] = true;
  }
  return static_cast<double>(std::count(used.begin(), used.end(), true)) /
         static_cast<double>(used.size());
}

template <typename T>
void save_codec(const ImageCodec<T>& codec, const std::filesystem::path& path) {
  Archive archive;
  archive.kind = "codec";
  archive.dtype = dtype_of<T>();
  const auto& c = codec.config;
  archive.set_meta("image_size", std::to_string(c.image_size));
  archive.set_meta("code_grid", std::to_string(c.code_grid));
  archive.set_meta("codebook_size", std::to_string(c.codebook_size));
  archive.set_meta("code_dim", std::to_string(c.code_dim));
  archive.set_meta("hidden", std::to_string(c.hidden));
  store_parameters(codec.params, archive);
  write_archive(path, archive);
}

template <typename T>
ImageCodec<T> load_codec(const std::filesystem::path& path) {
  const auto archive = read_archive(path);
  if (archive.kind != "codec") {
    throw ParseError(path.string() + ": archive kind '" + archive.kind + "' is not a codec");
  }
  CodecConfig cfg;
  auto get = [&](const char* key) {
    try {
      return std::stoi(archive.meta_value(key));
    } catch (const std::invalid_argument&) {
      throw ParseError(path.string() + ": metadata '" + key + "' is not an integer");
    }
  };
  cfg.image_size = get("image_size");
  cfg.code_grid = get("code_grid");
  cfg.codebook_size = get("codebook_size");
  cfg.code_dim = get("code_dim");
  cfg.hidden = get("hidden");
  auto codec = ImageCodec<T>::create(cfg);
  load_parameters(codec.params, archive);
  return codec;
}

#define OMNIPT_INSTANTIATE_CODEC(T)                                                           \
  template struct ImageCodec<T>;                                                              \
  template Tensor<T> extract_patches<T>(const CodecConfig&, std::span<const Image>);          \
  template Tensor<T> codebook_logits(const ImageCodec<T>&, const Tensor<T>&);                 \
  template Tensor<T> decode_patches(const ImageCodec<T>&, const Tensor<T>&);                  \
  template CodecLoss<T> codec_loss(const ImageCodec<T>&, std::span<const Image>, double,      \
                                   std::mt19937_64&);                                          \
  template CodecTrainResult codec_train(ImageCodec<T>&, std::span<const Image>, int);         \
  template CodeGrid encode_to_codes(const ImageCodec<T>&, const Image&);                      \
  template Image decode_from_codes(const ImageCodec<T>&, const CodeGrid&);                    \
  template double reconstruction_mse(const ImageCodec<T>&, std::span<const Image>);           \
  template double codebook_usage(const ImageCodec<T>&, std::span<const Image>);               \
  template void save_codec(const ImageCodec<T>&, const std::filesystem::path&);               \
  template ImageCodec<T> load_codec<T>(const std::filesystem::path&);

OMNIPT_INSTANTIATE_CODEC(float)
OMNIPT_INSTANTIATE_CODEC(double)

}  // namespace omnipt
