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
#include <random>

#include "doctest.h"
#include "frontends/embedders.hpp"
#include "support/fixtures.hpp"

using namespace omnipt;
using omnipt::testing::TempDir;

namespace {

// With unit gain, zero bias and negligible epsilon every row has mean 0 and
// (biased) variance 1.
void check_normalized(const Tensor<double>& x) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double m = 0.0, v = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) m += x.at(r, c);
    m /= static_cast<double>(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) v += (x.at(r, c) - m) * (x.at(r, c) - m);
    v /= static_cast<double>(x.cols());
    CHECK(std::abs(m) < 1e-9);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  }
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMatrix m(rows, cols);
  for (auto& v : m.values) v = n(rng);
  return m;
}

FeatureMatrix boxes(std::size_t rows) {
  FeatureMatrix m(rows, kLocationWidth);
  for (std::size_t r = 0; r < rows; ++r) {
    const float x = 0.1f * static_cast<float>(r);
    const auto loc = location_feature(x, 0.2f, x + 0.25f, 0.7f);
    std::copy(loc.begin(), loc.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

TEST_SUITE("frontends") {
  TEST_CASE("reserved tokens have fixed ids and unknown words map to [UNK]") {
    const Vocabulary v({"red", "circle"});
    CHECK(v.size() == Vocabulary::kReservedCount + 2);
    CHECK(v.id("[PAD]") == Vocabulary::kPad);
    CHECK(v.id("[CLS]") == Vocabulary::kCls);
    CHECK(v.id("[MASK]") == Vocabulary::kMask);
    CHECK(v.id("red") == Vocabulary::kReservedCount);
    CHECK(v.id("purple") == Vocabulary::kUnk);
    CHECK_THROWS_AS(Vocabulary({"red", "red"}), ValidationError);
  }

  TEST_CASE("words are lowercased and punctuation splits off") {
    const auto words = split_words("A Red circle, and  a cube.");
    const std::vector<std::string> expected{"a", "red", "circle", ",", "and", "a", "cube", "."};
    CHECK(words == expected);
    CHECK(normalize_text("  A  red\tcircle.") == "a red circle .");
  }

  TEST_CASE("tokenize and detokenize invert each other on in-vocabulary text") {
    const auto vocab = synth_vocabulary();
    const std::string caption = "a red circle and a blue square .";
    const auto ids = tokenize(caption, vocab).ids;
    CHECK(ids.size() == 8);
    CHECK(detokenize(ids, vocab) == caption);
  }

  TEST_CASE("vocabulary files round-trip") {
    TempDir dir("vocab");
    const auto vocab = synth_vocabulary();
    vocab.save(dir.path() / "vocab.txt");
    CHECK(Vocabulary::load(dir.path() / "vocab.txt") == vocab);
    CHECK_THROWS_AS(Vocabulary::load(dir.path() / "missing.txt"), IoError);
  }

  TEST_CASE("location features satisfy the box identities") {
    const auto loc = location_feature(0.25f, 0.5f, 0.75f, 1.0f);
    CHECK(loc[4] == 0.5f);
    CHECK(loc[5] == 0.5f);
    CHECK(loc[6] == 0.25f);
    CHECK(is_valid_location(loc));
    auto broken = loc;
    broken[6] = 0.3f;
    CHECK_FALSE(is_valid_location(broken));
    CHECK_THROWS_AS(location_feature(0.5f, 0.0f, 0.5f, 1.0f), ValidationError);
    CHECK_THROWS_AS(location_feature(0.0f, 0.0f, 1.5f, 1.0f), ValidationError);
  }

  TEST_CASE("every embedder produces d_h-wide layer-normalized rows") {
    const auto config = omnipt::testing::toy_config();
    std::mt19937_64 rng(4);
    ParameterSet<double> ps;
    auto te = TextEmbedder<double>::create(ps, config, rng);
    auto ve = VisionEmbedder<double>::create(ps, config, rng);
    auto ae = AudioEmbedder<double>::create(ps, config, rng);
    te.ln_epsilon = ve.ln_epsilon = ae.ln_epsilon = 1e-30;

    const std::vector<int> ids{6, 7, 8, 9};
    const auto t = embed_text(te, ids);
    CHECK(t.rows() == 4);
    CHECK(t.cols() == static_cast<std::size_t>(config.d_h));
    check_normalized(t);

    const auto v = embed_vision(ve, random_matrix(3, config.d_v, 1), boxes(3));
    CHECK(v.rows() == 3);
    check_normalized(v);

    const auto a = embed_audio(ae, random_matrix(5, config.d_a, 2));
    CHECK(a.rows() == 5);
    check_normalized(a);
  }

  TEST_CASE("text positions matter: the same token at two positions embeds differently") {
    const auto config = omnipt::testing::toy_config();
    std::mt19937_64 rng(4);
    ParameterSet<double> ps;
    const auto te = TextEmbedder<double>::create(ps, config, rng);
    const std::vector<int> ids{7, 7};
    const auto t = embed_text(te, ids);
    double diff = 0.0;
    for (std::size_t c = 0; c < t.cols(); ++c) diff += std::abs(t.at(0, c) - t.at(1, c));
    CHECK(diff > 1e-3);
  }

  TEST_CASE("malformed inputs are validation errors") {
    const auto config = omnipt::testing::toy_config();
    std::mt19937_64 rng(4);
    ParameterSet<double> ps;
    const auto te = TextEmbedder<double>::create(ps, config, rng);
    const auto ve = VisionEmbedder<double>::create(ps, config, rng);
    const auto ae = AudioEmbedder<double>::create(ps, config, rng);

    CHECK_THROWS_AS(embed_text(te, std::vector<int>{}), ValidationError);
    CHECK_THROWS_AS(embed_text(te, std::vector<int>{config.vocab_size}), ValidationError);
    CHECK_THROWS_AS(embed_text(te, std::vector<int>(config.max_text_len + 1, 6)), ValidationError);
    CHECK_THROWS_AS(embed_vision(ve, random_matrix(2, config.d_v + 1, 1), boxes(2)), ValidationError);
    CHECK_THROWS_AS(embed_vision(ve, random_matrix(2, config.d_v, 1), boxes(3)), ValidationError);
    CHECK_THROWS_AS(embed_audio(ae, FeatureMatrix()), ValidationError);
    CHECK_THROWS_AS(embed_audio(ae, random_matrix(config.max_audio_len + 1, config.d_a, 1)), ValidationError);
  }

  TEST_CASE("embedder gradients match finite differences") {
    const auto config = omnipt::testing::toy_config();
    std::mt19937_64 rng(4);
    ParameterSet<double> ps;
    const auto te = TextEmbedder<double>::create(ps, config, rng);
    const auto ve = VisionEmbedder<double>::create(ps, config, rng);
    const auto ae = AudioEmbedder<double>::create(ps, config, rng);
    const auto feats = random_matrix(3, config.d_v, 1);
    const auto locs = boxes(3);
    const auto frames = random_matrix(4, config.d_a, 2);
    const std::vector<int> ids{6, 9, 7};
    // Squares break the zero-sum symmetry of a normalized row.
    auto loss = [&] {
      return add(add(sum_squares(mul(embed_text(te, ids), embed_text(te, ids))),
                     sum_squares(gelu(embed_vision(ve, feats, locs)))),
                 sum_squares(sigmoid(embed_audio(ae, frames))));
    };
    const auto result = omnipt::testing::gradient_check(ps, loss, 120, 3);
    INFO(result.worst);
    CHECK(result.checked >= 100);
    CHECK(result.max_relative < 1e-5);
    CHECK(result.max_zero_abs < 1e-8);
  }
}
