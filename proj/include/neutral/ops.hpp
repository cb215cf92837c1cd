#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neutral/tensor.hpp"

// Differentiable primitives. Every op returns a fresh tensor; when any input
// requires a gradient the result carries a backward rule that accumulates
// into the inputs' gradient buffers.
namespace neutral {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

inline ConstMap as_mat(std::span<const double> d, std::size_t rows, std::size_t cols) {
  return ConstMap(d.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline MutMap as_mat(std::vector<double>& d, std::size_t rows, std::size_t cols) {
  return MutMap(d.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

template <class F>
Tensor unary_map(const Tensor& x, F&& f, std::function<void(const Node&)> bw) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, std::move(bw));
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](const detail::Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (auto* g = detail::parent_grad(self, p))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = detail::parent_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [da, db](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * db[i];
    if (auto* g = detail::parent_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * da[i];
  });
}

inline Tensor scale(const Tensor& x, double c) {
  return detail::unary_map(x, [c](double v) { return c * v; }, [c](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c * self.grad[i];
  });
}

inline Tensor add_scalar(const Tensor& x, double c) {
  return detail::unary_map(x, [c](double v) { return v + c; }, [](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

inline Tensor relu(const Tensor& x) {
  auto in = x.data();
  return detail::unary_map(x, [](double v) { return v > 0.0 ? v : 0.0; }, [in](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i)
        if (in[i] > 0.0) (*g)[i] += self.grad[i];
  });
}

inline Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = in[i];
    // Branching keeps exp() from overflowing for large |v|.
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  auto y = std::make_shared<const std::vector<double>>(out);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [y](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * (*y)[i] * (1.0 - (*y)[i]);
  });
}

inline Tensor sum(const Tensor& x) {
  auto d = x.data();
  double s = 0.0;
  for (double v : d) s += v;
  return Tensor::make_result(Shape{}, {s}, {x}, [](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (double& v : *g) v += self.grad[0];
  });
}

inline Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

// Sum over the last axis: [..., n] -> [...].
inline Tensor sum_last(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("sum_last on a scalar");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  std::vector<double> out(rows, 0.0);
  auto d = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r] += d[r * n + j];
  return Tensor::make_result(std::move(out_shape), std::move(out), {x}, [n](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i / n];
  });
}

// Same values, new extents. Shares the buffer.
inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size())
    throw DimensionError("reshape " + to_string(x.shape()) + " -> " + to_string(shape));
  return Tensor::make_result(std::move(shape), x.to_vector(), {x}, [](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

// Gathers x's flat entries at `indices` into a tensor of `shape`.
inline Tensor take(const Tensor& x, std::vector<std::size_t> indices, Shape shape) {
  if (numel(shape) != indices.size()) throw DimensionError("take: index count does not match shape");
  std::vector<double> out(indices.size());
  auto d = x.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= d.size()) throw IndexError("take: index out of range");
    out[i] = d[indices[i]];
  }
  return Tensor::make_result(std::move(shape), std::move(out), {x},
                             [idx = std::move(indices)](const detail::Node& self) {
                               if (auto* g = detail::parent_grad(self, 0))
                                 for (std::size_t i = 0; i < idx.size(); ++i) (*g)[idx[i]] += self.grad[i];
                             });
}

// Stacks equally shaped tensors along a new leading axis.
inline Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("stack of zero tensors");
  const Shape& s0 = parts.front().shape();
  std::vector<double> out;
  out.reserve(parts.size() * parts.front().size());
  for (const auto& p : parts) {
    if (p.shape() != s0) throw DimensionError("stack: mismatched shapes");
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), s0.begin(), s0.end());
  const std::size_t n = parts.front().size();
  return Tensor::make_result(std::move(shape), std::move(out), parts, [n](const detail::Node& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p)
      if (auto* g = detail::parent_grad(self, p))
        for (std::size_t i = 0; i < n; ++i) (*g)[i] += self.grad[p * n + i];
  });
}

// [A x B x C] -> [B x A x C].
inline Tensor transpose01(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("transpose01 needs rank 3, got " + to_string(x.shape()));
  const std::size_t A = x.dim(0), B = x.dim(1), C = x.dim(2);
  std::vector<double> out(x.size());
  auto d = x.data();
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      std::copy_n(d.begin() + (a * B + b) * C, C, out.begin() + (b * A + a) * C);
  return Tensor::make_result(Shape{B, A, C}, std::move(out), {x}, [A, B, C](const detail::Node& self) {
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t a = 0; a < A; ++a)
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c) (*g)[(a * B + b) * C + c] += self.grad[(b * A + a) * C + c];
  });
}

// Concatenates along the last axis; leading extents must agree.
inline Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin()))
    throw DimensionError("concat_last: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  const std::size_t na = a.shape().back(), nb = b.shape().back(), rows = a.size() / na;
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  auto da = a.data(), db = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    out.insert(out.end(), da.begin() + r * na, da.begin() + (r + 1) * na);
    out.insert(out.end(), db.begin() + r * nb, db.begin() + (r + 1) * nb);
  }
  Shape shape = a.shape();
  shape.back() = na + nb;
  return Tensor::make_result(std::move(shape), std::move(out), {a, b}, [na, nb, rows](const detail::Node& self) {
    const std::size_t w = na + nb;
    if (auto* g = detail::parent_grad(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < na; ++j) (*g)[r * na + j] += self.grad[r * w + j];
    if (auto* g = detail::parent_grad(self, 1))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < nb; ++j) (*g)[r * nb + j] += self.grad[r * w + na + j];
  });
}

// Plain matrix product [M x K] . [K x N].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul: " + to_string(a.shape()) + " . " + to_string(b.shape()));
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  std::vector<double> out(M * N);
  auto da = a.data(), db = b.data();
  detail::as_mat(out, M, N).noalias() = detail::as_mat(da, M, K) * detail::as_mat(db, K, N);
  return Tensor::make_result(Shape{M, N}, std::move(out), {a, b}, [da, db, M, K, N](const detail::Node& self) {
    auto G = detail::as_mat(std::span<const double>(self.grad), M, N);
    if (auto* g = detail::parent_grad(self, 0))
      detail::as_mat(*g, M, K).noalias() += G * detail::as_mat(db, K, N).transpose();
    if (auto* g = detail::parent_grad(self, 1))
      detail::as_mat(*g, K, N).noalias() += detail::as_mat(da, M, K).transpose() * G;
  });
}

// Bias-free dense layer: x [N x in] (or [in]) times weight [out x in] transposed.
inline Tensor linear(const Tensor& x, const Tensor& weight) {
  if (weight.rank() != 2) throw DimensionError("linear: weight must be [out x in]");
  const bool single = x.rank() == 1;
  if ((x.rank() != 1 && x.rank() != 2) || x.shape().back() != weight.dim(1))
    throw DimensionError("linear: input " + to_string(x.shape()) + " vs weight " + to_string(weight.shape()));
  const std::size_t N = single ? 1 : x.dim(0), in = weight.dim(1), out_dim = weight.dim(0);
  std::vector<double> out(N * out_dim);
  auto dx = x.data(), dw = weight.data();
  detail::as_mat(out, N, out_dim).noalias() = detail::as_mat(dx, N, in) * detail::as_mat(dw, out_dim, in).transpose();
  Shape shape = single ? Shape{out_dim} : Shape{N, out_dim};
  return Tensor::make_result(std::move(shape), std::move(out), {x, weight},
                             [dx, dw, N, in, out_dim](const detail::Node& self) {
                               auto G = detail::as_mat(std::span<const double>(self.grad), N, out_dim);
                               if (auto* g = detail::parent_grad(self, 0))
                                 detail::as_mat(*g, N, in).noalias() += G * detail::as_mat(dw, out_dim, in);
                               if (auto* g = detail::parent_grad(self, 1))
                                 detail::as_mat(*g, out_dim, in).noalias() += G.transpose() * detail::as_mat(dx, N, in);
                             });
}

// Per-batch a_b . b_b^T for a [B x M x D], b [B x N x D] -> [B x M x N].
inline Tensor batched_matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
    throw DimensionError("batched_matmul_nt: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  const std::size_t B = a.dim(0), M = a.dim(1), N = b.dim(1), D = a.dim(2);
  std::vector<double> out(B * M * N);
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < B; ++i) {
    detail::MutMap o(out.data() + i * M * N, M, N);
    o.noalias() = detail::as_mat(da.subspan(i * M * D, M * D), M, D) *
                  detail::as_mat(db.subspan(i * N * D, N * D), N, D).transpose();
  }
  return Tensor::make_result(Shape{B, M, N}, std::move(out), {a, b}, [da, db, B, M, N, D](const detail::Node& self) {
    std::span<const double> gs(self.grad);
    auto* ga = detail::parent_grad(self, 0);
    auto* gb = detail::parent_grad(self, 1);
    for (std::size_t i = 0; i < B; ++i) {
      auto G = detail::as_mat(gs.subspan(i * M * N, M * N), M, N);
      if (ga) detail::MutMap(ga->data() + i * M * D, M, D).noalias() += G * detail::as_mat(db.subspan(i * N * D, N * D), N, D);
      if (gb) detail::MutMap(gb->data() + i * N * D, N, D).noalias() += G.transpose() * detail::as_mat(da.subspan(i * M * D, M * D), M, D);
    }
  });
}

// Output length of a 1-D convolution.
inline std::size_t conv1d_output_length(std::size_t length, std::size_t width, std::size_t stride, std::size_t padding) {
  const std::size_t padded = length + 2 * padding;
  if (width > padded || stride == 0)
    throw DimensionError("conv1d: kernel width " + std::to_string(width) + " exceeds padded length " +
                         std::to_string(padded));
  return (padded - width) / stride + 1;
}

// Zero padding that keeps stride-1 odd-width convolutions length-preserving
// and halves (rounding up) for stride 2 with width 3.
inline std::size_t default_padding(std::size_t width) { return (width - 1) / 2; }

// Bias-free 1-D cross-correlation. input [C_in x L] or [B x C_in x L];
// kernels [C_out x C_in x W].
inline Tensor conv1d(const Tensor& input, const Tensor& kernels, std::size_t stride = 1,
                     std::optional<std::size_t> padding = std::nullopt) {
  if (kernels.rank() != 3) throw DimensionError("conv1d: kernels must be [C_out x C_in x W]");
  if (input.rank() != 2 && input.rank() != 3)
    throw DimensionError("conv1d: input must be [C x L] or [B x C x L], got " + to_string(input.shape()));
  const bool single = input.rank() == 2;
  const std::size_t B = single ? 1 : input.dim(0);
  const std::size_t Cin = input.dim(single ? 0 : 1), L = input.dim(single ? 1 : 2);
  const std::size_t Cout = kernels.dim(0), W = kernels.dim(2);
  if (kernels.dim(1) != Cin)
    throw DimensionError("conv1d: input has " + std::to_string(Cin) + " channels, kernels expect " +
                         std::to_string(kernels.dim(1)));
  const std::size_t pad = padding.value_or(default_padding(W));
  const std::size_t Lout = conv1d_output_length(L, W, stride, pad);
  const std::size_t rows = Cin * W, cols_n = B * Lout;

  // im2col: cols[(ci, w), (b, t)] = x[b, ci, t*stride + w - pad]
  auto cols = std::make_shared<std::vector<double>>(rows * cols_n, 0.0);
  auto x = input.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t ci = 0; ci < Cin; ++ci)
      for (std::size_t w = 0; w < W; ++w) {
        double* row = cols->data() + (ci * W + w) * cols_n + b * Lout;
        const double* src = x.data() + (b * Cin + ci) * L;
        for (std::size_t t = 0; t < Lout; ++t) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride + w) - static_cast<std::ptrdiff_t>(pad);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(L)) row[t] = src[pos];
        }
      }

  auto k = kernels.data();
  detail::RowMat prod = detail::as_mat(k, Cout, rows) * detail::as_mat(std::span<const double>(*cols), rows, cols_n);
  std::vector<double> out(B * Cout * Lout);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < Cout; ++co)
      for (std::size_t t = 0; t < Lout; ++t) out[(b * Cout + co) * Lout + t] = prod(co, b * Lout + t);

  Shape shape = single ? Shape{Cout, Lout} : Shape{B, Cout, Lout};
  return Tensor::make_result(
      std::move(shape), std::move(out), {input, kernels},
      [cols, k, B, Cin, L, Cout, W, Lout, rows, cols_n, stride, pad](const detail::Node& self) {
        detail::RowMat G(Cout, cols_n);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t co = 0; co < Cout; ++co)
            for (std::size_t t = 0; t < Lout; ++t) G(co, b * Lout + t) = self.grad[(b * Cout + co) * Lout + t];
        if (auto* gk = detail::parent_grad(self, 1))
          detail::as_mat(*gk, Cout, rows).noalias() += G * detail::as_mat(std::span<const double>(*cols), rows, cols_n).transpose();
        if (auto* gx = detail::parent_grad(self, 0)) {
          detail::RowMat dcols = detail::as_mat(k, Cout, rows).transpose() * G;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t ci = 0; ci < Cin; ++ci)
              for (std::size_t w = 0; w < W; ++w) {
                double* dst = gx->data() + (b * Cin + ci) * L;
                for (std::size_t t = 0; t < Lout; ++t) {
                  const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride + w) - static_cast<std::ptrdiff_t>(pad);
                  if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(L)) dst[pos] += dcols(ci * W + w, b * Lout + t);
                }
              }
        }
      });
}

// Per-channel normalization over the time axis with frozen affine (scale 1,
// shift 0). input [C x L] or [B x C x L].
inline Tensor instance_norm(const Tensor& input, double epsilon = 1e-5) {
  if (input.rank() != 2 && input.rank() != 3)
    throw DimensionError("instance_norm: input must be [C x L] or [B x C x L]");
  const std::size_t L = input.shape().back();
  const std::size_t rows = input.size() / L;
  auto x = input.data();
  std::vector<double> out(input.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x.data() + r * L;
    double m = 0.0;
    for (std::size_t t = 0; t < L; ++t) m += row[t];
    m /= static_cast<double>(L);
    double var = 0.0;
    for (std::size_t t = 0; t < L; ++t) var += (row[t] - m) * (row[t] - m);
    var /= static_cast<double>(L);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    (*inv_std)[r] = inv;
    for (std::size_t t = 0; t < L; ++t) out[r * L + t] = (row[t] - m) * inv;
  }
  auto y = std::make_shared<const std::vector<double>>(out);
  return Tensor::make_result(input.shape(), std::move(out), {input}, [y, inv_std, L, rows](const detail::Node& self) {
    auto* g = detail::parent_grad(self, 0);
    if (!g) return;
    const double n = static_cast<double>(L);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gy = self.grad.data() + r * L;
      const double* yr = y->data() + r * L;
      double mg = 0.0, mgy = 0.0;
      for (std::size_t t = 0; t < L; ++t) {
        mg += gy[t];
        mgy += gy[t] * yr[t];
      }
      mg /= n;
      mgy /= n;
      for (std::size_t t = 0; t < L; ++t) (*g)[r * L + t] += (*inv_std)[r] * (gy[t] - mg - yr[t] * mgy);
    }
  });
}

// Scales every vector along the last axis to unit length; norms are clamped
// below by epsilon.
inline Tensor normalize_last(const Tensor& x, double epsilon = 1e-12) {
  if (x.rank() == 0) throw DimensionError("normalize_last on a scalar");
  const std::size_t D = x.shape().back(), rows = x.size() / D;
  auto d = x.data();
  std::vector<double> out(x.size());
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < D; ++j) s += d[r * D + j] * d[r * D + j];
    const double n = std::max(std::sqrt(s), epsilon);
    (*norms)[r] = n;
    for (std::size_t j = 0; j < D; ++j) out[r * D + j] = d[r * D + j] / n;
  }
  auto y = std::make_shared<const std::vector<double>>(out);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [y, norms, D, rows, epsilon](const detail::Node& self) {
    auto* g = detail::parent_grad(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = (*norms)[r];
      const double* gy = self.grad.data() + r * D;
      const double* yr = y->data() + r * D;
      if (n > epsilon) {
        double dot = 0.0;
        for (std::size_t j = 0; j < D; ++j) dot += gy[j] * yr[j];
        for (std::size_t j = 0; j < D; ++j) (*g)[r * D + j] += (gy[j] - yr[j] * dot) / n;
      } else {
        for (std::size_t j = 0; j < D; ++j) (*g)[r * D + j] += gy[j] / epsilon;
      }
    }
  });
}

// log(sum(exp(.))) over the last axis, evaluated with max subtraction.
// Entries of -inf act as masked out; each row needs one finite entry.
inline Tensor logsumexp_last(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("logsumexp on a scalar");
  const std::size_t n = x.shape().back();
  if (n == 0) throw DimensionError("logsumexp over an empty axis");
  const std::size_t rows = x.size() / n;
  auto d = x.data();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = d.data() + r * n;
    const double m = *std::max_element(row, row + n);
    if (!std::isfinite(m)) throw ContractError("logsumexp: row has no finite entry");
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - m);
    out[r] = m + std::log(s);
  }
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  auto lse = std::make_shared<const std::vector<double>>(out);
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [d, lse, n, rows](const detail::Node& self) {
    auto* g = detail::parent_grad(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < n; ++j) (*g)[r * n + j] += self.grad[r] * std::exp(d[r * n + j] - (*lse)[r]);
  });
}

// Scalar log-sum-exp of a vector.
inline Tensor logsumexp(const Tensor& values) {
  if (values.rank() != 1) throw DimensionError("logsumexp expects a vector, got " + to_string(values.shape()));
  return logsumexp_last(values);
}

// Cosine similarity of two vectors, norms clamped below by epsilon.
inline Tensor cosine_similarity(const Tensor& a, const Tensor& b, double epsilon = 1e-12) {
  if (a.rank() != 1) throw DimensionError("cosine_similarity expects vectors");
  detail::require_same_shape(a, b, "cosine_similarity");
  return sum(mul(normalize_last(a, epsilon), normalize_last(b, epsilon)));
}

}  // namespace neutral
