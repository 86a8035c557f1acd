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
#include "numerics/adam.hpp"
#include "numerics/ops.hpp"
#include "numerics/parameters.hpp"
#include "support/fixtures.hpp"

using namespace omnipt;
using omnipt::testing::gradient_check;

namespace {

// sum(y * r) with a fixed random r, so no op output is differentiated through
// a symmetric reduction that hides errors (e.g. softmax rows summing to 1).
Tensor<double> project(const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> r(y.numel());
  for (auto& v : r) v = n(rng);
  return sum(mul(y, Tensor<double>::from_data(y.shape(), std::move(r))));
}

void check_op(const char* name, ParameterSet<double>& params, const std::function<Tensor<double>()>& loss) {
  const auto result = gradient_check(params, loss, 60, 17);
  INFO(name << " worst " << result.worst);
  CHECK(result.checked > 0);
  CHECK(result.max_relative < 1e-6);
  CHECK(result.max_zero_abs < 1e-8);
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("finite differences agree with every differentiable op") {
    std::mt19937_64 rng(3);
    ParameterSet<double> ps;
    auto a = ps.add_normal("a", {3, 4}, rng, 1.0);
    auto b = ps.add_normal("b", {4, 5}, rng, 1.0);
    auto c = ps.add_normal("c", {5, 4}, rng, 1.0);
    auto v = ps.add_normal("v", {4}, rng, 1.0);
    auto g = ps.add_normal("g", {4}, rng, 1.0);
    auto pos = ps.add_normal("pos", {3, 4}, rng, 1.0);
    for (auto& x : pos.data_mut()) x = 0.5 + std::abs(x);

    check_op("matmul", ps, [&] { return project(matmul(a, b), 1); });
    check_op("matmul_nt", ps, [&] { return project(matmul_nt(a, c), 2); });
    check_op("transpose", ps, [&] { return project(transpose(a), 3); });
    check_op("add/sub/mul", ps, [&] { return project(mul(add(a, pos), sub(a, pos)), 4); });
    check_op("scale", ps, [&] { return project(scale(a, 2.5), 5); });
    check_op("linear", ps, [&] { return project(linear(a, b, Tensor<double>()), 6); });
    check_op("add_bias", ps, [&] { return project(add_bias(a, v), 7); });
    check_op("gelu", ps, [&] { return project(gelu(a), 8); });
    check_op("sigmoid", ps, [&] { return project(sigmoid(a), 9); });
    check_op("natural_log", ps, [&] { return project(natural_log(pos), 10); });
    check_op("softmax rows", ps, [&] { return project(softmax(a, 1), 11); });
    check_op("softmax cols", ps, [&] { return project(softmax(a, 0), 12); });
    check_op("log_softmax", ps, [&] { return project(log_softmax(a), 13); });
    const std::vector<std::uint8_t> allowed{1, 0, 1, 1, 0, 1, 1, 1, 1, 1, 0, 0};
    check_op("masked_softmax", ps, [&] { return project(masked_softmax(a, allowed), 14); });
    check_op("layer_norm", ps, [&] { return project(layer_norm(a, g, v), 15); });
    const std::vector<int> ids{2, 0, 4, 2};
    check_op("embedding", ps, [&] { return project(embedding(c, ids), 16); });
    const std::vector<std::size_t> rows{2, 0};
    check_op("gather_rows", ps, [&] { return project(gather_rows(a, rows), 17); });
    check_op("slice_cols/concat_cols", ps, [&] { return project(concat_cols<double>({slice_cols(a, 1, 2), pos}), 18); });
    check_op("slice_rows", ps, [&] { return project(slice_rows(pos, 1, 2), 22); });
    check_op("concat_rows", ps, [&] { return project(concat_rows<double>({a, pos}), 19); });
    check_op("mean", ps, [&] { return mean(mul(a, pos)); });
    check_op("sum_squares", ps, [&] { return sum_squares(a); });
    const std::vector<std::size_t> cols{3, 0, 1};
    check_op("pick", ps, [&] { return project(pick(a, cols), 20); });
    check_op("l2_normalize_rows", ps, [&] { return project(l2_normalize_rows(a), 21); });
    const std::vector<double> targets{1, 0, 0.5, 1, 0, 1, 0, 1, 0.25, 0, 1, 0};
    check_op("binary_cross_entropy", ps, [&] { return binary_cross_entropy(sigmoid(a), std::span<const double>(targets)); });
  }

  TEST_CASE("two backward calls add exactly twice the gradient into leaves") {
    std::mt19937_64 rng(1);
    ParameterSet<double> ps;
    auto w = ps.add_normal("w", {3, 3}, rng, 1.0);
    const auto loss = sum(gelu(matmul(w, w)));
    loss.backward();
    const std::vector<double> once(w.grad().begin(), w.grad().end());
    loss.backward();
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(w.grad()[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
  }

  TEST_CASE("no-grad guard records nothing and restores the previous mode") {
    auto w = Tensor<double>::full({2, 2}, 1.0, true);
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      CHECK_FALSE(matmul(w, w).requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(matmul(w, w).requires_grad());
  }

  TEST_CASE("backward requires a scalar") {
    auto w = Tensor<double>::full({2, 2}, 1.0, true);
    CHECK_THROWS_AS(matmul(w, w).backward(), ContractError);
  }

  TEST_CASE("shape errors are reported as dimension errors") {
    auto a = Tensor<double>::zeros({2, 3});
    auto b = Tensor<double>::zeros({2, 3});
    CHECK_THROWS_AS(matmul(a, b), DimensionError);
    CHECK_THROWS_AS(add(a, Tensor<double>::zeros({3, 2})), DimensionError);
    CHECK_THROWS_AS(Tensor<double>::from_data({2, 2}, {1.0, 2.0}), DimensionError);
  }

  TEST_CASE("softmax is stable for large logits and masked entries get zero weight") {
    auto x = Tensor<double>::from_data({1, 3}, {1000.0, 1000.0, -1000.0});
    const auto s = softmax(x, 1);
    CHECK(s.at(0) == doctest::Approx(0.5));
    CHECK(s.at(2) == 0.0);
    const std::vector<std::uint8_t> allowed{0, 1, 1};
    const auto m = masked_softmax(x, allowed);
    CHECK(m.at(0) == 0.0);
    CHECK(m.at(1) == doctest::Approx(1.0));
    const std::vector<std::uint8_t> none{0, 0, 0};
    const auto z = masked_softmax(x, none);
    for (double v : z.data()) CHECK(v == 0.0);
  }

  TEST_CASE("straight-through forwards the argmax and passes gradients to the soft input") {
    auto soft = Tensor<double>::from_data({1, 3}, {0.2, 0.5, 0.3}, true);
    const auto hard = straight_through_onehot(soft);
    CHECK(hard.at(0) == 0.0);
    CHECK(hard.at(1) == 1.0);
    CHECK(hard.at(2) == 0.0);
    project(hard, 4).backward();
    const auto direct = Tensor<double>::from_data({1, 3}, {0.2, 0.5, 0.3}, true);
    project(direct, 4).backward();
    for (int i = 0; i < 3; ++i) CHECK(soft.grad()[i] == direct.grad()[i]);
  }

  TEST_CASE("dropout is the identity at rate zero and keeps the mean otherwise") {
    std::mt19937_64 rng(9);
    auto x = Tensor<double>::full({200, 50}, 1.0);
    const auto same = dropout(x, 0.0, rng);
    for (double v : same.data()) CHECK(v == 1.0);
    const auto dropped = dropout(x, 0.25, rng);
    double total = 0.0;
    std::size_t zeros = 0;
    for (double v : dropped.data()) {
      total += v;
      zeros += v == 0.0;
    }
    CHECK(total / 10000.0 == doctest::Approx(1.0).epsilon(0.03));
    CHECK(static_cast<double>(zeros) / 10000.0 == doctest::Approx(0.25).epsilon(0.08));
  }

  TEST_CASE("binary cross-entropy stays finite at exact 0/1 probabilities") {
    auto p = Tensor<double>::from_data({1, 2}, {1.0, 0.0});
    const std::vector<double> t{1.0, 0.0};
    CHECK(binary_cross_entropy(p, std::span<const double>(t)).item() == 0.0);
    const auto half = Tensor<double>::from_data({1, 1}, {0.5});
    const std::vector<double> one{1.0};
    CHECK(binary_cross_entropy(half, std::span<const double>(one)).item() == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("adam matches a hand-computed first step") {
    ParameterSet<double> ps;
    auto w = ps.add_zeros("w", {2});
    w.grad_mut()[0] = 0.5;
    w.grad_mut()[1] = -2.0;
    AdamState<double> state;
    state.learning_rate = 0.1;
    adam_step(ps, state);
    // First bias-corrected step moves each weight by lr * g / (|g| + eps').
    CHECK(w.at(0) == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(w.at(1) == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(state.step_count == 1);
  }

  TEST_CASE("adam refuses a non-finite gradient before touching any parameter") {
    ParameterSet<double> ps;
    auto a = ps.add_zeros("a", {1});
    auto b = ps.add_zeros("layer.b", {1});
    a.grad_mut()[0] = 1.0;
    b.grad_mut()[0] = std::nan("");
    AdamState<double> state;
    try {
      adam_step(ps, state);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("layer.b") != std::string::npos);
    }
    CHECK(a.at(0) == 0.0);
  }

  TEST_CASE("gradient clipping bounds the global norm") {
    ParameterSet<double> ps;
    auto a = ps.add_zeros("a", {2});
    a.grad_mut()[0] = 3.0;
    a.grad_mut()[1] = 4.0;
    CHECK(ps.clip_grad_norm(1.0) == doctest::Approx(5.0));
    CHECK(ps.grad_norm() == doctest::Approx(1.0));
    CHECK(a.grad()[0] == doctest::Approx(0.6));
  }

  TEST_CASE("parameter handles stay valid as the set grows") {
    std::mt19937_64 rng(2);
    ParameterSet<double> ps;
    auto first = ps.add_zeros("first", {2});
    for (int i = 0; i < 50; ++i) ps.add_normal("p" + std::to_string(i), {3}, rng);
    first.data_mut()[0] = 7.0;
    CHECK(ps.get("first").at(0) == 7.0);
    CHECK_THROWS_AS(ps.add_zeros("first", {1}), ContractError);
  }
}
