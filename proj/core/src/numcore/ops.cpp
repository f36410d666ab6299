#include "mvpt/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>

#include "mvpt/error.hpp"

namespace mvpt::numcore {

namespace {

// Row reductions over float data (sums, norms, softmax, layer norm) accumulate
// in double; matmul stays in float.
template <typename T>
using Acc = std::conditional_t<std::is_same_v<T, float>, double, T>;

enum class Broadcast { kSame, kRow, kCol, kScalar };

template <typename T>
Broadcast broadcast_kind(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  if (br == ar && bc == ac) return Broadcast::kSame;
  if (br == 1 && bc == 1) return Broadcast::kScalar;
  if (br == 1 && bc == ac) return Broadcast::kRow;
  if (bc == 1 && br == ar) return Broadcast::kCol;
  throw ShapeError(std::string(op) + ": cannot broadcast " + shape_string(b.shape()) + " onto " +
                   shape_string(a.shape()));
}

inline std::size_t bindex(Broadcast kind, std::size_t r, std::size_t c, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame:
      return r * cols + c;
    case Broadcast::kRow:
      return c;
    case Broadcast::kCol:
      return r;
    case Broadcast::kScalar:
      break;
  }
  return 0;
}

template <typename T>
Shape matrix_shape(std::size_t rows, std::size_t cols) {
  return {rows, cols};
}

// Shared driver for add/sub/mul/div. `fwd(x, y)` computes the value,
// `dx(x, y)` and `dy(x, y)` the partials.
template <typename T, typename Fwd, typename Dx, typename Dy>
Tensor<T> binary(const char* op, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, Dx dx, Dy dy) {
  const Broadcast kind = broadcast_kind(op, a, b);
  auto out = make_result<T>(a.shape());
  const std::size_t rows = a.rows(), cols = a.cols();
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      po[r * cols + c] = fwd(pa[r * cols + c], pb[bindex(kind, r, c, cols)]);
    }
  }
  auto* A = a.impl();
  auto* B = b.impl();
  auto* O = out.impl();
  record<T>(op, {&a, &b}, out, [A, B, O, kind, rows, cols, dx, dy] {
    const T* g = O->grad.data();
    const T* xa = A->data.data();
    const T* xb = B->data.data();
    T* ga = A->requires_grad ? A->grad_buffer() : nullptr;
    std::vector<Acc<T>> gb;
    if (B->requires_grad) gb.assign(B->data.size(), Acc<T>{0});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        const std::size_t j = bindex(kind, r, c, cols);
        if (ga) ga[i] += g[i] * dx(xa[i], xb[j]);
        if (!gb.empty()) gb[j] += Acc<T>(g[i]) * Acc<T>(dy(xa[i], xb[j]));
      }
    }
    if (!gb.empty()) {
      T* out = B->grad_buffer();
      for (std::size_t j = 0; j < gb.size(); ++j) out[j] += T(gb[j]);
    }
  });
  return out;
}

template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const char* op, const Tensor<T>& a, Fwd fwd, Deriv deriv) {
  auto out = make_result<T>(a.shape());
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>(op, {&a}, out, [A, O, n, deriv] {
    const T* g = O->grad.data();
    T* ga = A->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * deriv(A->data[i], O->data[i]);
  });
  return out;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  auto out = make_result<T>(matrix_shape<T>(n, m));
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = out.mutable_data().data();
  std::vector<T> crow(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(crow.begin(), crow.end(), T{0});
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = pa[i * k + p];
      const T* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
    for (std::size_t j = 0; j < m; ++j) pc[i * m + j] = T(crow[j]);
  }
  auto* A = a.impl();
  auto* B = b.impl();
  auto* O = out.impl();
  record<T>("matmul", {&a, &b}, out, [A, B, O, n, k, m] {
    const T* g = O->grad.data();
    if (A->requires_grad) {
      // dA = dC * B^T, accumulated row by row over j in increasing order.
      T* ga = A->grad_buffer();
      const T* pb = B->data.data();
      std::vector<T> bt(m * k);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < m; ++j) bt[j * k + p] = pb[p * m + j];
      std::vector<T> arow(k);
      for (std::size_t i = 0; i < n; ++i) {
        std::fill(arow.begin(), arow.end(), T{0});
        for (std::size_t j = 0; j < m; ++j) {
          const T gij = g[i * m + j];
          const T* brow = bt.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) arow[p] += gij * brow[p];
        }
        for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += T(arow[p]);
      }
    }
    if (B->requires_grad) {
      const T* pa = A->data.data();
      std::vector<T> acc(k * m, T{0});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = pa[i * k + p];
          for (std::size_t j = 0; j < m; ++j) acc[p * m + j] += aip * g[i * m + j];
        }
      }
      T* gb = B->grad_buffer();
      for (std::size_t q = 0; q < k * m; ++q) gb[q] += T(acc[q]);
    }
  });
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_result<T>(matrix_shape<T>(cols, rows));
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) po[c * rows + r] = pa[r * cols + c];
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("transpose", {&a}, out, [A, O, rows, cols] {
    const T* g = O->grad.data();
    T* ga = A->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[c * rows + r];
  });
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T, T) { return T{1}; },
      [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T, T) { return T{1}; },
      [](T, T) { return T{-1}; });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "mul", a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "div", a, b, [](T x, T y) { return x / y; }, [](T, T y) { return T{1} / y; },
      [](T x, T y) { return -x / (y * y); });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary<T>(
      "scale", a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value) {
  return unary<T>(
      "add_scalar", a, [value](T x) { return x + value; }, [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T floor) {
  return unary<T>(
      "clamp_min", a, [floor](T x) { return x > floor ? x : floor; },
      [floor](T x, T) { return x > floor ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T{1} / x; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary<T>(
      "relu", a, [](T x) { return x > T{0} ? x : T{0}; },
      [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T kA = T(0.044715);
  return unary<T>(
      "gelu", a,
      [](T x) { return T(0.5) * x * (T{1} + std::tanh(kC * (x + kA * x * x * x))); },
      [](T x, T) {
        const T t = std::tanh(kC * (x + kA * x * x * x));
        return T(0.5) * (T{1} + t) + T(0.5) * x * (T{1} - t * t) * kC * (T{1} + T{3} * kA * x * x);
      });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_result<T>(a.shape());
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = pa + r * cols;
    T* y = po + r * cols;
    T mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    Acc<T> total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] = T(y[c] / total);
  }
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("softmax_rows", {&a}, out, [A, O, rows, cols] {
    const T* g = O->grad.data();
    const T* y = O->data.data();
    T* ga = A->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      Acc<T> dot = 0;
      for (std::size_t c = 0; c < cols; ++c) dot += Acc<T>(g[r * cols + c]) * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c)
        ga[r * cols + c] += T(y[r * cols + c] * (g[r * cols + c] - dot));
    }
  });
  return out;
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_result<T>(a.shape());
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = pa + r * cols;
    T mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    Acc<T> total = 0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(Acc<T>(x[c]) - mx);
    const Acc<T> lse = mx + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) po[r * cols + c] = T(x[c] - lse);
  }
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("log_softmax_rows", {&a}, out, [A, O, rows, cols] {
    const T* g = O->grad.data();
    const T* y = O->data.data();
    T* ga = A->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      Acc<T> gsum = 0;
      for (std::size_t c = 0; c < cols; ++c) gsum += g[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c)
        ga[r * cols + c] += T(g[r * cols + c] - std::exp(Acc<T>(y[r * cols + c])) * gsum);
    }
  });
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gain.numel() != cols || bias.numel() != cols) {
    throw ShapeError("layer_norm: gain " + shape_string(gain.shape()) + " / bias " +
                     shape_string(bias.shape()) + " do not match input " +
                     shape_string(x.shape()));
  }
  auto out = make_result<T>(x.shape());
  std::vector<Acc<T>> xhat(rows * cols);
  std::vector<Acc<T>> rstd(rows);
  const T* px = x.data().data();
  const T* pg = gain.data().data();
  const T* pb = bias.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = px + r * cols;
    Acc<T> mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= Acc<T>(cols);
    Acc<T> var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= Acc<T>(cols);
    rstd[r] = Acc<T>{1} / std::sqrt(var + Acc<T>(eps));
    for (std::size_t c = 0; c < cols; ++c) {
      const Acc<T> h = (row[c] - mu) * rstd[r];
      xhat[r * cols + c] = h;
      po[r * cols + c] = T(h * pg[c] + pb[c]);
    }
  }
  auto* X = x.impl();
  auto* G = gain.impl();
  auto* B = bias.impl();
  auto* O = out.impl();
  record<T>("layer_norm", {&x, &gain, &bias}, out,
            [X, G, B, O, rows, cols, xhat = std::move(xhat), rstd = std::move(rstd)] {
              const T* g = O->grad.data();
              const T* pg = G->data.data();
              std::vector<Acc<T>> gg(cols, Acc<T>{0}), gb(cols, Acc<T>{0});
              T* gx = X->requires_grad ? X->grad_buffer() : nullptr;
              for (std::size_t r = 0; r < rows; ++r) {
                Acc<T> mean_dh = 0, mean_dh_h = 0;
                for (std::size_t c = 0; c < cols; ++c) {
                  const std::size_t i = r * cols + c;
                  const Acc<T> dh = Acc<T>(g[i]) * pg[c];
                  mean_dh += dh;
                  mean_dh_h += dh * xhat[i];
                  gg[c] += g[i] * xhat[i];
                  gb[c] += g[i];
                }
                if (!gx) continue;
                mean_dh /= Acc<T>(cols);
                mean_dh_h /= Acc<T>(cols);
                for (std::size_t c = 0; c < cols; ++c) {
                  const std::size_t i = r * cols + c;
                  gx[i] += T(rstd[r] * (Acc<T>(g[i]) * pg[c] - mean_dh - xhat[i] * mean_dh_h));
                }
              }
              if (G->requires_grad) {
                T* out = G->grad_buffer();
                for (std::size_t c = 0; c < cols; ++c) out[c] += T(gg[c]);
              }
              if (B->requires_grad) {
                T* out = B->grad_buffer();
                for (std::size_t c = 0; c < cols; ++c) out[c] += T(gb[c]);
              }
            });
  return out;
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column mismatch, " + shape_string(parts.front().shape()) +
                       " vs " + shape_string(p.shape()));
    }
    rows += p.rows();
  }
  auto out = make_result<T>(matrix_shape<T>(rows, cols));
  T* po = out.mutable_data().data();
  std::vector<TensorImpl<T>*> impls;
  impls.reserve(parts.size());
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), po);
    po += p.numel();
    impls.push_back(p.impl());
  }
  auto* O = out.impl();
  record<T>("concat_rows", parts, out, [impls = std::move(impls), O] {
    const T* g = O->grad.data();
    for (auto* P : impls) {
      const std::size_t n = P->data.size();
      if (P->requires_grad) {
        T* gp = P->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[i];
      }
      g += n;
    }
  });
  return out;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch, " + shape_string(parts.front().shape()) +
                       " vs " + shape_string(p.shape()));
    }
    cols += p.cols();
  }
  auto out = make_result<T>(matrix_shape<T>(rows, cols));
  T* po = out.mutable_data().data();
  std::vector<TensorImpl<T>*> impls;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    const T* src = p.data().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(src + r * pc, src + (r + 1) * pc, po + r * cols + offset);
    impls.push_back(p.impl());
    offsets.push_back(offset);
    offset += pc;
  }
  auto* O = out.impl();
  record<T>("concat_cols", parts, out,
            [impls = std::move(impls), offsets = std::move(offsets), O, rows, cols] {
              const T* g = O->grad.data();
              for (std::size_t k = 0; k < impls.size(); ++k) {
                auto* P = impls[k];
                if (!P->requires_grad) continue;
                const std::size_t pc = P->data.size() / rows;
                T* gp = P->grad_buffer();
                for (std::size_t r = 0; r < rows; ++r)
                  for (std::size_t c = 0; c < pc; ++c)
                    gp[r * pc + c] += g[r * cols + offsets[k] + c];
              }
            });
  return out;
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  auto out = make_result<T>(matrix_shape<T>(end - begin, cols));
  std::copy(a.data().begin() + begin * cols, a.data().begin() + end * cols,
            out.mutable_data().begin());
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("slice_rows", {&a}, out, [A, O, begin, cols] {
    const T* g = O->grad.data();
    T* ga = A->grad_buffer() + begin * cols;
    const std::size_t n = O->data.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
  });
  return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_string(a.shape()));
  }
  const std::size_t rows = a.rows(), cols = a.cols(), width = end - begin;
  auto out = make_result<T>(matrix_shape<T>(rows, width));
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(pa + r * cols + begin, pa + r * cols + end, po + r * width);
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("slice_cols", {&a}, out, [A, O, begin, rows, cols, width] {
    const T* g = O->grad.data();
    T* ga = A->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < width; ++c) ga[r * cols + begin + c] += g[r * width + c];
  });
  return out;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("gather_rows: no indices");
  const std::size_t cols = a.cols();
  for (auto idx : indices) {
    if (idx >= a.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(idx) + " out of range for " +
                       shape_string(a.shape()));
    }
  }
  auto out = make_result<T>(matrix_shape<T>(indices.size(), cols));
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy(pa + indices[i] * cols, pa + (indices[i] + 1) * cols, po + i * cols);
  auto* A = a.impl();
  auto* O = out.impl();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  record<T>("gather_rows", {&a}, out, [A, O, cols, idx = std::move(idx)] {
    const T* g = O->grad.data();
    T* ga = A->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) ga[idx[i] * cols + c] += g[i * cols + c];
  });
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  Acc<T> total = 0;
  for (T v : a.data()) total += v;
  auto out = make_result<T>({});
  out.mutable_data()[0] = T(total);
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("sum", {&a}, out, [A, O] {
    const T g = O->grad[0];
    T* ga = A->grad_buffer();
    for (std::size_t i = 0; i < A->data.size(); ++i) ga[i] += g;
  });
  return out;
}

template <typename T>
Tensor<T> sum_axis(const Tensor<T>& a, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("sum_axis: axis must be 0 or 1");
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_result<T>(axis == 0 ? matrix_shape<T>(1, cols) : matrix_shape<T>(rows, 1));
  const T* pa = a.data().data();
  std::vector<Acc<T>> acc(out.numel(), Acc<T>{0});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) acc[axis == 0 ? c : r] += pa[r * cols + c];
  T* po = out.mutable_data().data();
  for (std::size_t i = 0; i < acc.size(); ++i) po[i] = T(acc[i]);
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("sum_axis", {&a}, out, [A, O, rows, cols, axis] {
    const T* g = O->grad.data();
    T* ga = A->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[axis == 0 ? c : r];
  });
  return out;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, int axis) {
  const std::size_t n = axis == 0 ? a.rows() : a.cols();
  return scale(sum_axis(a, axis), T{1} / T(n));
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T{1} / T(a.numel()));
}

template <typename T>
Tensor<T> l2_norm_rows(const Tensor<T>& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_result<T>(matrix_shape<T>(rows, 1));
  const T* pa = a.data().data();
  T* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    Acc<T> ss = 0;
    for (std::size_t c = 0; c < cols; ++c) ss += Acc<T>(pa[r * cols + c]) * pa[r * cols + c];
    po[r] = T(std::sqrt(ss));
  }
  auto* A = a.impl();
  auto* O = out.impl();
  record<T>("l2_norm_rows", {&a}, out, [A, O, rows, cols] {
    const T* g = O->grad.data();
    const T* pa = A->data.data();
    T* ga = A->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const T n = O->data[r];
      if (n == T{0}) continue;
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r] * pa[r * cols + c] / n;
    }
  });
  return out;
}

template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& a, T floor) {
  return div(a, clamp_min(l2_norm_rows(a), floor));
}

#define MVPT_INSTANTIATE(T)                                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> transpose(const Tensor<T>&);                                            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> div(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                             \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                        \
  template Tensor<T> clamp_min(const Tensor<T>&, T);                                         \
  template Tensor<T> exp(const Tensor<T>&);                                                  \
  template Tensor<T> log(const Tensor<T>&);                                                  \
  template Tensor<T> relu(const Tensor<T>&);                                                 \
  template Tensor<T> gelu(const Tensor<T>&);                                                 \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                         \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                                     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);    \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                 \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                 \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);            \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> sum_axis(const Tensor<T>&, int);                                        \
  template Tensor<T> mean_axis(const Tensor<T>&, int);                                       \
  template Tensor<T> mean(const Tensor<T>&);                                                 \
  template Tensor<T> l2_norm_rows(const Tensor<T>&);                                         \
  template Tensor<T> normalize_rows(const Tensor<T>&, T);

MVPT_INSTANTIATE(float)
MVPT_INSTANTIATE(double)

#undef MVPT_INSTANTIATE

}  // namespace mvpt::numcore
