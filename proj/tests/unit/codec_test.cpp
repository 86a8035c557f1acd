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

#include <cmath>
#include <fstream>

#include "codec/image_codec.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "trainer/trainer.hpp"

using namespace omnipt;
using omnipt::testing::TempDir;

namespace {

std::vector<Image> scene_images(std::size_t n, std::uint64_t seed) {
  std::vector<Image> out;
  for (const auto& r : omnipt::testing::make_records(n, seed)) out.push_back(r.image);
  return out;
}

CodecConfig small_config() {
  CodecConfig c;
  c.hidden = 32;
  c.codebook_size = 16;
  c.code_dim = 8;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_SUITE("image_codec") {
  TEST_CASE("the temperature schedule runs geometrically from start to floor") {
    const CodecConfig c;
    CHECK(gumbel_temperature(c, 0, 100) == doctest::Approx(1.0));
    CHECK(gumbel_temperature(c, 99, 100) == doctest::Approx(1.0 / 16.0));
    // Halfway in log space.
    CHECK(gumbel_temperature(c, 33, 67) == doctest::Approx(0.25));
    CHECK(gumbel_temperature(c, 500, 100) == doctest::Approx(1.0 / 16.0));
  }

  TEST_CASE("configuration errors are reported before training") {
    CodecConfig c;
    c.code_grid = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = CodecConfig{};
    c.tau_floor = 2.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = CodecConfig{};
    c.diversity_weight = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("patches tile the image cell by cell") {
    CodecConfig c;
    Image img(32);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i % 251) / 251.0f;
    const std::vector<Image> images{img};
    const auto p = extract_patches<double>(c, images);
    CHECK(p.rows() == 16);
    CHECK(p.cols() == static_cast<std::size_t>(c.patch_values()));
    // Cell (row 1, col 2) starts at pixel (8, 16).
    CHECK(p.at(1 * 4 + 2, 0) == doctest::Approx(img.at(8, 16, 0)));
    CHECK(p.at(1 * 4 + 2, static_cast<std::size_t>(c.patch_values()) - 1) == doctest::Approx(img.at(15, 23, 2)));
    const std::vector<Image> wrong{Image(16)};
    CHECK_THROWS_AS(extract_patches<double>(c, wrong), ValidationError);
  }

  TEST_CASE("reconstruction error decreases over the first five epochs") {
    CodecConfig c;
    c.seed = 3;
    auto codec = ImageCodec<float>::create(c);
    const auto images = scene_images(256, 1);
    const auto result = codec_train(codec, std::span<const Image>(images), 5);
    REQUIRE_FALSE(result.diverged);
    REQUIRE(result.epochs.size() == 5);
    for (std::size_t e = 1; e < result.epochs.size(); ++e) {
      INFO("epoch " << e);
      CHECK(result.epochs[e].train_mse < result.epochs[e - 1].train_mse);
    }
    CHECK(result.epochs.back().temperature == doctest::Approx(c.tau_floor));
  }

  TEST_CASE("training is deterministic under a fixed seed") {
    const auto images = scene_images(32, 2);
    auto a = ImageCodec<float>::create(small_config());
    auto b = ImageCodec<float>::create(small_config());
    codec_train(a, std::span<const Image>(images), 2);
    codec_train(b, std::span<const Image>(images), 2);
    CHECK(parameter_checksum(a.params) == parameter_checksum(b.params));
    auto other = small_config();
    other.seed = 5;
    auto c = ImageCodec<float>::create(other);
    codec_train(c, std::span<const Image>(images), 2);
    CHECK(parameter_checksum(a.params) != parameter_checksum(c.params));
  }

  TEST_CASE("eval encoding and decoding are deterministic and in range") {
    const auto images = scene_images(8, 3);
    auto codec = ImageCodec<double>::create(small_config());
    codec_train(codec, std::span<const Image>(images), 1);
    for (const auto& img : images) {
      const auto g1 = encode_to_codes(codec, img);
      const auto g2 = encode_to_codes(codec, img);
      CHECK(g1 == g2);
      CHECK(g1.ids.size() == 16);
      for (int id : g1.ids) CHECK((id >= 0 && id < 16));
      const auto out = decode_from_codes(codec, g1);
      CHECK(out == decode_from_codes(codec, g1));
      CHECK(out.size == 32);
      for (float v : out.pixels) CHECK((v >= 0.0f && v <= 1.0f));
    }
    CodeGrid bad{4, std::vector<int>(16, 16)};
    CHECK_THROWS_AS(decode_from_codes(codec, bad), ValidationError);
    CHECK_THROWS_AS(decode_from_codes(codec, CodeGrid{3, std::vector<int>(9, 0)}), ValidationError);
    CHECK_THROWS_AS(encode_to_codes(codec, Image(16)), ValidationError);
  }

  TEST_CASE("codec archives round-trip and reject other kinds") {
    TempDir dir("codec");
    const auto images = scene_images(8, 3);
    auto codec = ImageCodec<float>::create(small_config());
    codec_train(codec, std::span<const Image>(images), 1);
    save_codec(codec, dir.path() / "codec.bin");
    const auto loaded = load_codec<float>(dir.path() / "codec.bin");
    CHECK(parameter_checksum(loaded.params) == parameter_checksum(codec.params));
    CHECK(loaded.config.codebook_size == 16);
    CHECK(encode_to_codes(loaded, images[0]) == encode_to_codes(codec, images[0]));

    Archive other;
    other.kind = "checkpoint";
    write_archive(dir.path() / "other.bin", other);
    CHECK_THROWS_AS(load_codec<float>(dir.path() / "other.bin"), ParseError);
    CHECK_THROWS_AS(load_codec<float>(dir.path() / "missing.bin"), IoError);
  }

  TEST_CASE("codec gradients match finite differences") {
    auto c = small_config();
    c.hidden = 8;
    c.codebook_size = 6;
    c.code_dim = 4;
    auto codec = ImageCodec<double>::create(c);
    const auto images = scene_images(2, 6);
    auto loss = [&] {
      std::mt19937_64 rng(9);  // identical Gumbel noise on every evaluation
      return codec_loss(codec, std::span<const Image>(images), 0.5, rng).total;
    };
    const auto result = omnipt::testing::gradient_check(codec.params, loss, 120, 2);
    INFO(result.worst);
    CHECK(result.checked >= 100);
    CHECK(result.max_relative < 1e-4);
  }
}
