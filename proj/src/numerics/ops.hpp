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
#include <random>
#include <span>
#include <vector>

#include "numerics/tensor.hpp"

namespace omnipt {

// Tensors of rank 1 are treated as a single row wherever a matrix is expected.

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// a [m x k] times the transpose of b [n x k].
template <typename T> Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
// x [m x n] plus bias [n] on every row.
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
// x W + b with W [in x out]; bias may be undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
// Elementwise; every input must be positive.
template <typename T> Tensor<T> natural_log(const Tensor<T>& x);

// Numerically stable softmax along any axis.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T> Tensor<T> log_softmax(const Tensor<T>& x);
// Row-wise softmax restricted to entries with allowed != 0. Disallowed
// entries get exactly zero weight; a row with nothing allowed is all zeros.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> allowed);

// Normalizes over the last axis, then applies gain and bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, double epsilon = 1e-5);

// Rows of table [V x d] selected by ids.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids);
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows);
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// Sum of squares of every element.
template <typename T> Tensor<T> sum_squares(const Tensor<T>& x);
// out[i] = x[i, index[i]] for x [m x n].
template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::size_t> index);

// Each row divided by (its L2 norm + epsilon).
template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, double epsilon = 1e-8);

// Inverted dropout; identity when rate == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::mt19937_64& rng);

// Forward emits the row-wise argmax one-hot; backward passes the incoming
// gradient straight through to the soft input.
template <typename T> Tensor<T> straight_through_onehot(const Tensor<T>& soft);

// Mean binary cross-entropy of probabilities against targets in [0, 1].
// Zero-weight terms are skipped so exact 0/1 probabilities stay finite.
template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& probs, std::span<const T> targets);

}  // namespace omnipt
