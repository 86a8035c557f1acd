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

#include "numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace omnipt {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

struct MatDims {
  std::size_t rows;
  std::size_t cols;
};

template <typename T>
MatDims mat_dims(const Tensor<T>& t) {
  if (t.dim() > 2) {
    throw DimensionError("expected a vector or matrix, got " + shape_str(t.shape()));
  }
  return {t.rows(), t.cols()};
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

// C[m x n] += A[m x k] B[k x n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{0}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] += A[m x k] B[n x k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T B[k x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t k, std::size_t m,
             std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T{0}) continue;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
Shape matrix_shape(std::size_t rows, std::size_t cols) {
  return Shape{rows, cols};
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto [m, k] = mat_dims(a);
  const auto [k2, n] = mat_dims(b);
  if (k != k2) {
    throw DimensionError("matmul: inner extents disagree, " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  std::vector<T> out(m * n, T{0});
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_op_result<T>(
      matrix_shape<T>(m, n), std::move(out), {a.node_ptr(), b.node_ptr()},
      [m, k, n](TensorNode<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          gemm_nt(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          gemm_tn(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, n);
        }
      });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  const auto [m, k] = mat_dims(a);
  const auto [n, k2] = mat_dims(b);
  if (k != k2) {
    throw DimensionError("matmul_nt: inner extents disagree, " +
                         shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
  }
  std::vector<T> out(m * n, T{0});
  gemm_nt(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_op_result<T>(
      matrix_shape<T>(m, n), std::move(out), {a.node_ptr(), b.node_ptr()},
      [m, k, n](TensorNode<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          gemm_nn(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          gemm_tn(self.grad.data(), pa.value.data(), pb.grad.data(), m, n, k);
        }
      });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  const auto [m, n] = mat_dims(a);
  std::vector<T> out(m * n);
  const auto src = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
  return make_op_result<T>(matrix_shape<T>(n, m), std::move(out), {a.node_ptr()},
                           [m, n](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                 p.grad[i * n + j] += self.grad[j * m + i];
                           });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](TensorNode<T>& self) {
                             for (auto& parent : self.parents) {
                               if (!parent->requires_grad) continue;
                               parent->ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 parent->grad[i] += self.grad[i];
                             }
                           });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](TensorNode<T>& self) {
                             auto& pa = *self.parents[0];
                             auto& pb = *self.parents[1];
                             if (pa.requires_grad) {
                               pa.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 pa.grad[i] += self.grad[i];
                             }
                             if (pb.requires_grad) {
                               pb.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 pb.grad[i] -= self.grad[i];
                             }
                           });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](TensorNode<T>& self) {
                             auto& pa = *self.parents[0];
                             auto& pb = *self.parents[1];
                             if (pa.requires_grad) {
                               pa.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 pa.grad[i] += self.grad[i] * pb.value[i];
                             }
                             if (pb.requires_grad) {
                               pb.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 pb.grad[i] += self.grad[i] * pa.value[i];
                             }
                           });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_op_result<T>(a.shape(), std::move(out), {a.node_ptr()},
                           [factor](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               p.grad[i] += self.grad[i] * factor;
                           });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const auto [m, n] = mat_dims(x);
  if (bias.numel() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) +
                         " does not match rows of " + shape_str(x.shape()));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr(), bias.node_ptr()},
                           [m, n](TensorNode<T>& self) {
                             auto& px = *self.parents[0];
                             auto& pb = *self.parents[1];
                             if (px.requires_grad) {
                               px.ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 px.grad[i] += self.grad[i];
                             }
                             if (pb.requires_grad) {
                               pb.ensure_grad();
                               for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t j = 0; j < n; ++j)
                                   pb.grad[j] += self.grad[i * n + j];
                             }
                           });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  auto y = matmul(x, weight);
  return bias.defined() ? add_bias(y, bias) : y;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  // tanh approximation
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = in[i];
    out[i] = static_cast<T>(0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v))));
  }
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr()},
                           [](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               const double v = p.value[i];
                               const double u = kC * (v + kA * v * v * v);
                               const double t = std::tanh(u);
                               const double du = kC * (1.0 + 3.0 * kA * v * v);
                               const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
                               p.grad[i] += static_cast<T>(self.grad[i] * d);
                             }
                           });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = in[i];
    out[i] = v >= T{0} ? T{1} / (T{1} + std::exp(-v))
                       : std::exp(v) / (T{1} + std::exp(v));
  }
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr()},
                           [](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               const T s = self.value[i];
                               p.grad[i] += self.grad[i] * s * (T{1} - s);
                             }
                           });
}

template <typename T>
Tensor<T> natural_log(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(in[i] > T{0})) throw NumericError("natural_log: non-positive input");
    out[i] = std::log(in[i]);
  }
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr()},
                           [](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               p.grad[i] += self.grad[i] / p.value[i];
                             }
                           });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const auto& shape = x.shape();
  if (axis >= shape.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) +
                         " out of range for " + shape_str(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t len = shape[axis];
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      T mx = in[base];
      for (std::size_t l = 1; l < len; ++l) mx = std::max(mx, in[base + l * inner]);
      T total{0};
      for (std::size_t l = 0; l < len; ++l) {
        const T e = std::exp(in[base + l * inner] - mx);
        out[base + l * inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < len; ++l) out[base + l * inner] /= total;
    }
  }
  return make_op_result<T>(
      shape, std::move(out), {x.node_ptr()},
      [outer, inner, len](TensorNode<T>& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * len * inner + i;
            T dot{0};
            for (std::size_t l = 0; l < len; ++l)
              dot += self.grad[base + l * inner] * self.value[base + l * inner];
            for (std::size_t l = 0; l < len; ++l) {
              const std::size_t idx = base + l * inner;
              p.grad[idx] += self.value[idx] * (self.grad[idx] - dot);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x) {
  const auto [m, n] = mat_dims(x);
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = in.data() + i * n;
    const T mx = *std::max_element(row, row + n);
    T total{0};
    for (std::size_t j = 0; j < n; ++j) total += std::exp(row[j] - mx);
    const T log_total = std::log(total) + mx;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - log_total;
  }
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr()},
                           [m, n](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < m; ++i) {
                               T gsum{0};
                               for (std::size_t j = 0; j < n; ++j) gsum += self.grad[i * n + j];
                               for (std::size_t j = 0; j < n; ++j) {
                                 const std::size_t idx = i * n + j;
                                 p.grad[idx] += self.grad[idx] - std::exp(self.value[idx]) * gsum;
                               }
                             }
                           });
}

template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> allowed) {
  const auto [m, n] = mat_dims(x);
  if (allowed.size() != m * n) {
    throw DimensionError("masked_softmax: mask of " + std::to_string(allowed.size()) +
                         " entries for " + shape_str(x.shape()));
  }
  std::vector<T> out(m * n, T{0});
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t base = i * n;
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (allowed[base + j]) {
        mx = std::max(mx, in[base + j]);
        any = true;
      }
    }
    if (!any) continue;
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      if (!allowed[base + j]) continue;
      const T e = std::exp(in[base + j] - mx);
      out[base + j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < n; ++j) out[base + j] /= total;
  }
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr()},
                           [m, n](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < m; ++i) {
                               const std::size_t base = i * n;
                               T dot{0};
                               for (std::size_t j = 0; j < n; ++j)
                                 dot += self.grad[base + j] * self.value[base + j];
                               for (std::size_t j = 0; j < n; ++j) {
                                 const T s = self.value[base + j];
                                 if (s != T{0}) p.grad[base + j] += s * (self.grad[base + j] - dot);
                               }
                             }
                           });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double epsilon) {
  if (epsilon <= 0.0) throw ValidationError("layer_norm: epsilon must be positive");
  const std::size_t n = x.shape().back();
  const std::size_t m = x.numel() / n;
  if (gain.numel() != n || bias.numel() != n) {
    throw DimensionError("layer_norm: gain/bias width does not match " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(x.numel());
  // normalized values and per-row inverse std are kept for backward
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(m);
  const auto in = x.data();
  const auto g = gain.data();
  const auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = in.data() + i * n;
    T mu{0};
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(n);
    const T is = T{1} / std::sqrt(var + static_cast<T>(epsilon));
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (row[j] - mu) * is;
      xhat[i * n + j] = h;
      out[i * n + j] = h * g[j] + b[j];
    }
  }
  return make_op_result<T>(
      x.shape(), std::move(out), {x.node_ptr(), gain.node_ptr(), bias.node_ptr()},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        if (pg.requires_grad) {
          pg.ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
              pg.grad[j] += self.grad[i * n + j] * xhat[i * n + j];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
        }
        if (px.requires_grad) {
          px.ensure_grad();
          const T inv_n = T{1} / static_cast<T>(n);
          for (std::size_t i = 0; i < m; ++i) {
            T sum_d{0}, sum_dx{0};
            for (std::size_t j = 0; j < n; ++j) {
              const T d = self.grad[i * n + j] * pg.value[j];
              sum_d += d;
              sum_dx += d * xhat[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const T d = self.grad[i * n + j] * pg.value[j];
              px.grad[i * n + j] +=
                  inv_std[i] * (d - inv_n * sum_d - xhat[i * n + j] * inv_n * sum_dx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids) {
  const auto [v, d] = mat_dims(table);
  if (ids.empty()) throw DimensionError("embedding: empty id list");
  std::vector<T> out(ids.size() * d);
  const auto src = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw ValidationError("embedding: id " + std::to_string(ids[i]) +
                            " outside table of " + std::to_string(v) + " rows");
    }
    std::copy_n(src.begin() + ids[i] * d, d, out.begin() + i * d);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return make_op_result<T>(matrix_shape<T>(ids.size(), d), std::move(out),
                           {table.node_ptr()},
                           [d, saved = std::move(saved)](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < saved.size(); ++i)
                               for (std::size_t j = 0; j < d; ++j)
                                 p.grad[saved[i] * d + j] += self.grad[i * d + j];
                           });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows) {
  const auto [m, n] = mat_dims(x);
  if (rows.empty()) throw DimensionError("gather_rows: empty row list");
  std::vector<T> out(rows.size() * n);
  const auto src = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) +
                           " outside " + shape_str(x.shape()));
    }
    std::copy_n(src.begin() + rows[i] * n, n, out.begin() + i * n);
  }
  std::vector<std::size_t> saved(rows.begin(), rows.end());
  return make_op_result<T>(matrix_shape<T>(rows.size(), n), std::move(out),
                           {x.node_ptr()},
                           [n, saved = std::move(saved)](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < saved.size(); ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                 p.grad[saved[i] * n + j] += self.grad[i * n + j];
                           });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count) {
  const auto [m, n] = mat_dims(x);
  if (count == 0 || start + count > m) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", +" +
                         std::to_string(count) + ") outside " + shape_str(x.shape()));
  }
  std::vector<T> out(x.data().begin() + start * n, x.data().begin() + (start + count) * n);
  return make_op_result<T>(matrix_shape<T>(count, n), std::move(out), {x.node_ptr()},
                           [start, n](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               p.grad[start * n + i] += self.grad[i];
                           });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count) {
  const auto [m, n] = mat_dims(x);
  if (count == 0 || start + count > n) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", +" +
                         std::to_string(count) + ") outside " + shape_str(x.shape()));
  }
  std::vector<T> out(m * count);
  const auto src = x.data();
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(src.begin() + i * n + start, count, out.begin() + i * count);
  return make_op_result<T>(matrix_shape<T>(m, count), std::move(out), {x.node_ptr()},
                           [m, n, start, count](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < count; ++j)
                                 p.grad[i * n + start + j] += self.grad[i * count + j];
                           });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  const std::size_t n = parts.front().cols();
  std::size_t total_rows = 0;
  std::vector<NodePtr<T>> parents;
  std::vector<T> out;
  for (const auto& part : parts) {
    const auto [m, c] = mat_dims(part);
    if (c != n) {
      throw DimensionError("concat_rows: width " + std::to_string(c) + " vs " +
                           std::to_string(n));
    }
    total_rows += m;
    out.insert(out.end(), part.data().begin(), part.data().end());
    parents.push_back(part.node_ptr());
  }
  return make_op_result<T>(matrix_shape<T>(total_rows, n), std::move(out),
                           std::move(parents), [](TensorNode<T>& self) {
                             std::size_t offset = 0;
                             for (auto& parent : self.parents) {
                               const std::size_t len = parent->value.size();
                               if (parent->requires_grad) {
                                 parent->ensure_grad();
                                 for (std::size_t i = 0; i < len; ++i)
                                   parent->grad[i] += self.grad[offset + i];
                               }
                               offset += len;
                             }
                           });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  const std::size_t m = parts.front().rows();
  std::size_t total_cols = 0;
  std::vector<NodePtr<T>> parents;
  std::vector<std::size_t> widths;
  for (const auto& part : parts) {
    const auto [r, c] = mat_dims(part);
    if (r != m) {
      throw DimensionError("concat_cols: height " + std::to_string(r) + " vs " +
                           std::to_string(m));
    }
    widths.push_back(c);
    total_cols += c;
    parents.push_back(part.node_ptr());
  }
  std::vector<T> out(m * total_cols);
  std::size_t col = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto src = parts[p].data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(src.begin() + i * widths[p], widths[p], out.begin() + i * total_cols + col);
    col += widths[p];
  }
  return make_op_result<T>(matrix_shape<T>(m, total_cols), std::move(out),
                           std::move(parents),
                           [m, total_cols, widths = std::move(widths)](TensorNode<T>& self) {
                             std::size_t col = 0;
                             for (std::size_t p = 0; p < self.parents.size(); ++p) {
                               auto& parent = *self.parents[p];
                               if (parent.requires_grad) {
                                 parent.ensure_grad();
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < widths[p]; ++j)
                                     parent.grad[i * widths[p] + j] +=
                                         self.grad[i * total_cols + col + j];
                               }
                               col += widths[p];
                             }
                           });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total{0};
  for (T v : x.data()) total += v;
  return make_op_result<T>({1}, {total}, {x.node_ptr()}, [](TensorNode<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> sum_squares(const Tensor<T>& x) {
  T total{0};
  for (T v : x.data()) total += v * v;
  return make_op_result<T>({1}, {total}, {x.node_ptr()}, [](TensorNode<T>& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < p.grad.size(); ++i)
      p.grad[i] += T{2} * p.value[i] * self.grad[0];
  });
}

template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::size_t> index) {
  const auto [m, n] = mat_dims(x);
  if (index.size() != m) {
    throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (index[i] >= n) {
      throw ValidationError("pick: index " + std::to_string(index[i]) +
                            " outside width " + std::to_string(n));
    }
    out[i] = x.data()[i * n + index[i]];
  }
  std::vector<std::size_t> saved(index.begin(), index.end());
  return make_op_result<T>({m}, std::move(out), {x.node_ptr()},
                           [n, saved = std::move(saved)](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < saved.size(); ++i)
                               p.grad[i * n + saved[i]] += self.grad[i];
                           });
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, double epsilon) {
  const auto [m, n] = mat_dims(x);
  std::vector<T> out(x.numel());
  std::vector<T> norms(m);
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    T ss{0};
    for (std::size_t j = 0; j < n; ++j) ss += in[i * n + j] * in[i * n + j];
    norms[i] = std::sqrt(ss);
    const T denom = norms[i] + static_cast<T>(epsilon);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = in[i * n + j] / denom;
  }
  return make_op_result<T>(
      x.shape(), std::move(out), {x.node_ptr()},
      [m, n, epsilon, norms = std::move(norms)](TensorNode<T>& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          const T r = norms[i];
          const T denom = r + static_cast<T>(epsilon);
          // y = x / (r + eps); dy/dx = I/denom - x x^T / (r denom^2)
          T dot{0};
          for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * p.value[i * n + j];
          for (std::size_t j = 0; j < n; ++j) {
            T g = self.grad[i * n + j] / denom;
            if (r > T{0}) g -= p.value[i * n + j] * dot / (r * denom * denom);
            p.grad[i * n + j] += g;
          }
        }
      });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ValidationError("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const T factor = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  for (auto& v : mask) v = keep(rng) ? factor : T{0};
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * mask[i];
  return make_op_result<T>(x.shape(), std::move(out), {x.node_ptr()},
                           [mask = std::move(mask)](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < mask.size(); ++i)
                               p.grad[i] += self.grad[i] * mask[i];
                           });
}

template <typename T>
Tensor<T> straight_through_onehot(const Tensor<T>& soft) {
  const auto [m, n] = mat_dims(soft);
  std::vector<T> out(m * n, T{0});
  const auto in = soft.data();
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = in.data() + i * n;
    out[i * n + static_cast<std::size_t>(std::max_element(row, row + n) - row)] = T{1};
  }
  return make_op_result<T>(soft.shape(), std::move(out), {soft.node_ptr()},
                           [](TensorNode<T>& self) {
                             auto& p = *self.parents[0];
                             p.ensure_grad();
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               p.grad[i] += self.grad[i];
                           });
}

template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& probs, std::span<const T> targets) {
  if (targets.size() != probs.numel()) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + shape_str(probs.shape()));
  }
  constexpr T kFloor = std::numeric_limits<T>::min();
  const auto s = probs.data();
  const std::size_t count = s.size();
  T total{0};
  for (std::size_t i = 0; i < count; ++i) {
    const T y = targets[i];
    if (y > T{0}) total -= y * std::log(std::max(s[i], kFloor));
    if (y < T{1}) total -= (T{1} - y) * std::log(std::max(T{1} - s[i], kFloor));
  }
  std::vector<T> saved(targets.begin(), targets.end());
  return make_op_result<T>(
      {1}, {total / static_cast<T>(count)}, {probs.node_ptr()},
      [count, kFloor, saved = std::move(saved)](TensorNode<T>& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        const T g = self.grad[0] / static_cast<T>(count);
        for (std::size_t i = 0; i < count; ++i) {
          const T y = saved[i];
          const T si = p.value[i];
          T d{0};
          if (y > T{0}) d -= y / std::max(si, kFloor);
          if (y < T{1}) d += (T{1} - y) / std::max(T{1} - si, kFloor);
          p.grad[i] += g * d;
        }
      });
}

#define OMNIPT_INSTANTIATE_OPS(T)                                                      \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> transpose(const Tensor<T>&);                                      \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> scale(const Tensor<T>&, T);                                       \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> gelu(const Tensor<T>&);                                           \
  template Tensor<T> sigmoid(const Tensor<T>&);                                        \
  template Tensor<T> natural_log(const Tensor<T>&);                                    \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                           \
  template Tensor<T> log_softmax(const Tensor<T>&);                                    \
  template Tensor<T> masked_softmax(const Tensor<T>&, std::span<const std::uint8_t>);  \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                double);                                               \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const int>);                \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);      \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);           \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);           \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                       \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                       \
  template Tensor<T> sum(const Tensor<T>&);                                            \
  template Tensor<T> mean(const Tensor<T>&);                                           \
  template Tensor<T> sum_squares(const Tensor<T>&);                                    \
  template Tensor<T> pick(const Tensor<T>&, std::span<const std::size_t>);             \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&, double);                      \
  template Tensor<T> dropout(const Tensor<T>&, double, std::mt19937_64&);              \
  template Tensor<T> straight_through_onehot(const Tensor<T>&);                        \
  template Tensor<T> binary_cross_entropy(const Tensor<T>&, std::span<const T>);

OMNIPT_INSTANTIATE_OPS(float)
OMNIPT_INSTANTIATE_OPS(double)

}  // namespace omnipt
