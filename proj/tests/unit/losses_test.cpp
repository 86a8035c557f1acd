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
#include "losses/pretext_losses.hpp"
#include "support/fixtures.hpp"

using namespace omnipt;

namespace {

struct Fixture {
  ModelConfig config = omnipt::testing::toy_config();
  std::mt19937_64 rng{12};
  ParameterSet<double> params;
  TaskHeads<double> heads = TaskHeads<double>::create(params, config, rng);
  CrossEncoder<double> encoder = CrossEncoder<double>::create(params, config, rng);

  ModalityEmbedding<double> rows(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n * static_cast<std::size_t>(config.d_h));
    for (auto& x : v) x = d(r);
    return {Tensor<double>::from_data({n, static_cast<std::size_t>(config.d_h)}, std::move(v)), n};
  }

  void zero(Tensor<double>& t) {
    for (auto& v : t.data_mut()) v = 0.0;
  }
};

FeatureMatrix random_features(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMatrix m(rows, cols);
  for (auto& v : m.values) v = n(rng);
  return m;
}

}  // namespace

TEST_SUITE("pretext_losses") {
  TEST_CASE("uniform logits give ln(class count) for the classification losses") {
    Fixture f;
    f.zero(f.heads.mlm_w);
    f.zero(f.heads.mlm_b);
    f.zero(f.heads.mrc_w);
    f.zero(f.heads.mrc_b);
    const auto seq = assemble(f.encoder, f.rows(6, 1), f.rows(4, 2), {}, {});
    const auto encoded = encode(f.encoder, seq, ForwardContext::eval());
    const TokenMaskPlan text_plan{Modality::kText, 6, 0.15, {1, 4}};
    const std::vector<int> targets{7, 9};
    CHECK(mlm_loss(encoded, seq, text_plan, targets, f.heads).item() ==
          doctest::Approx(std::log(static_cast<double>(f.config.vocab_size))).epsilon(1e-9));
    const TokenMaskPlan region_plan{Modality::kVision, 4, 0.15, {0, 3}};
    const std::vector<int> labels{1, 5, 2, 30};
    CHECK(mrc_loss(encoded, seq, region_plan, labels, f.heads).item() ==
          doctest::Approx(std::log(static_cast<double>(f.config.n_classes))).epsilon(1e-9));
  }

  TEST_CASE("cross entropy matches a hand computation and rejects bad targets") {
    const auto logits = Tensor<double>::from_data({2, 3}, {1, 2, 3, 0, 0, 0});
    const std::vector<int> targets{2, 1};
    const double row0 = -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
    const double row1 = std::log(3.0);
    CHECK(cross_entropy(logits, targets).item() == doctest::Approx((row0 + row1) / 2).epsilon(1e-12));
    CHECK_THROWS_AS(cross_entropy(logits, std::vector<int>{3, 0}), ValidationError);
    CHECK_THROWS_AS(cross_entropy(logits, std::vector<int>{0}), DimensionError);
  }

  TEST_CASE("equal-similarity NCE with k negatives equals ln(k + 1)") {
    Fixture f;
    f.zero(f.heads.mam_w);
    f.zero(f.heads.mam_b);
    for (std::size_t frames : {3u, 6u, 11u}) {
      const auto seq = assemble<double>(f.encoder, {}, {}, f.rows(frames, 3), {});
      const auto encoded = encode(f.encoder, seq, ForwardContext::eval());
      const TokenMaskPlan plan{Modality::kAudio, frames, 0.15, {1}};
      const auto originals = random_features(frames, static_cast<std::size_t>(f.config.d_a), 4);
      const auto loss = mam_nce_loss(encoded, seq, plan, originals, f.heads);
      REQUIRE(loss.has_value());
      CHECK(loss->item() == doctest::Approx(std::log(static_cast<double>(frames))).epsilon(1e-9));
    }
  }

  TEST_CASE("NCE prefers the positive when it is the most similar original") {
    const auto originals = random_features(4, 3, 9);
    std::vector<double> pred(originals.values.begin(), originals.values.end());
    const auto predictions = Tensor<double>::from_data({4, 3}, pred);
    const std::vector<std::size_t> diagonal{0, 1, 2, 3};
    const std::vector<std::size_t> shifted{1, 2, 3, 0};
    CHECK(cosine_info_nce(predictions, originals, diagonal).item() <
          cosine_info_nce(predictions, originals, shifted).item());
  }

  TEST_CASE("NCE is skipped when no unmasked frame remains") {
    Fixture f;
    const auto seq = assemble<double>(f.encoder, {}, {}, f.rows(2, 3), {});
    const auto encoded = encode(f.encoder, seq, ForwardContext::eval());
    const TokenMaskPlan plan{Modality::kAudio, 2, 0.9, {0, 1}};
    CHECK_FALSE(mam_nce_loss(encoded, seq, plan, random_features(2, 32, 1), f.heads).has_value());
  }

  TEST_CASE("matching at s = 0.5 costs ln 2") {
    Fixture f;
    f.zero(f.heads.sm_w);
    f.zero(f.heads.sm_b);
    const auto cls = f.rows(1, 5).rows;
    const auto scores = match_scores(cls, f.heads);
    for (double s : scores.data()) CHECK(s == 0.5);
    CHECK(sm_loss(cls, case_label(true, true, true), f.heads).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("feature regression is the mean squared row distance") {
    const auto pred = Tensor<double>::from_data({2, 2}, {1, 2, 3, 4});
    FeatureMatrix target(2, 2);
    target.values = {1, 0, 0, 4};
    CHECK(mean_squared_rows(pred, target).item() == doctest::Approx((4.0 + 9.0) / 2.0));
    CHECK_THROWS_AS(mean_squared_rows(pred, FeatureMatrix(2, 3)), DimensionError);
  }

  TEST_CASE("aggregate sums weighted active terms and rejects negative weights") {
    LossParts<double> parts;
    parts[static_cast<std::size_t>(LossTerm::kMlm)] = Tensor<double>::scalar(2.0);
    parts[static_cast<std::size_t>(LossTerm::kSm)] = Tensor<double>::scalar(0.5);
    LossWeights w;
    w[LossTerm::kSm] = 4.0;
    const auto bundle = aggregate(parts, w);
    CHECK(bundle.total.item() == doctest::Approx(4.0));
    CHECK(bundle.active(LossTerm::kMlm));
    CHECK_FALSE(bundle.active(LossTerm::kDir));
    w[LossTerm::kMlm] = -1.0;
    CHECK_THROWS_AS(aggregate(parts, w), ValidationError);
    const auto empty = aggregate(LossParts<double>{}, LossWeights{});
    CHECK(empty.total.item() == 0.0);
    CHECK_FALSE(empty.warning.empty());
  }

  TEST_CASE("span lookups stay inside their modality") {
    Fixture f;
    const auto seq = assemble<double>(f.encoder, f.rows(3, 1), {}, {}, {});
    const auto encoded = encode(f.encoder, seq, ForwardContext::eval());
    const std::vector<std::size_t> inside{2}, outside{3};
    CHECK(span_rows(encoded, seq.text, inside).at(0, 0) == encoded.at(3, 0));
    CHECK_THROWS_AS(span_rows(encoded, seq.text, outside), ContractError);
    CHECK_THROWS_AS(span_rows(encoded, seq.vision, inside), ContractError);
  }

  TEST_CASE("every loss term's gradient matches finite differences") {
    auto model = OptModel<double>::create(omnipt::testing::toy_config(), 21);
    for (std::size_t t = 0; t < kLossTermCount; ++t) {
      const auto term = static_cast<LossTerm>(t);
      const auto result = omnipt::testing::loss_term_gradient_check(model, term, 3, 40, 100 + t);
      INFO(std::string(loss_term_name(term)) << " worst " << result.worst << " analytic " << result.worst_analytic
                                    << " numeric " << result.worst_numeric);
      CHECK(result.checked >= 40);
      CHECK(result.max_relative < 1e-4);
      CHECK(result.max_zero_abs < 1e-8);
    }
  }
}
