#include "lexigan/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <string>

#include "lexigan/errors.hpp"

namespace lexigan::ad {

namespace {

std::atomic<bool> g_backward_fault{false};

struct PatternStore {
  enum class Mode { off, record, replay } mode = Mode::off;
  std::vector<std::vector<unsigned char>> masks;
  std::size_t cursor = 0;
};
thread_local PatternStore g_pattern;

// Positive-side mask for x, honouring a pinned pattern.
template <typename T>
std::vector<unsigned char> positive_mask(std::span<const T> x) {
  if (g_pattern.mode == PatternStore::Mode::replay) {
    if (g_pattern.cursor >= g_pattern.masks.size() || g_pattern.masks[g_pattern.cursor].size() != x.size()) {
      throw UsageError("activation pattern replay does not match the recorded computation");
    }
    return g_pattern.masks[g_pattern.cursor++];
  }
  std::vector<unsigned char> m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) m[i] = x[i] > T(0);
  if (g_pattern.mode == PatternStore::Mode::record) g_pattern.masks.push_back(m);
  return m;
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(s));
  }
}

// Lays out the receptive fields of x [B,C,L] as rows (c,k) and columns (b,o);
// out-of-range taps read zero.
template <typename T>
void im2col(const T* x, std::size_t batch, std::size_t channels, std::size_t length, std::size_t kernel,
            const Conv1dGeometry& geo, std::size_t out_len, T* col) {
  const std::size_t cols = batch * out_len;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < kernel; ++k) {
      T* row = col + (c * kernel + k) * cols;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* src = x + (b * channels + c) * length;
        T* dst = row + b * out_len;
        for (std::size_t o = 0; o < out_len; ++o) {
          const auto pos = static_cast<std::ptrdiff_t>(o * geo.stride + k) - static_cast<std::ptrdiff_t>(geo.pad_left);
          dst[o] = (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) ? src[pos] : T(0);
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into x [B,C,L].
template <typename T>
void col2im(const T* col, std::size_t batch, std::size_t channels, std::size_t length, std::size_t kernel,
            const Conv1dGeometry& geo, std::size_t out_len, T* x) {
  const std::size_t cols = batch * out_len;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const T* row = col + (c * kernel + k) * cols;
      for (std::size_t b = 0; b < batch; ++b) {
        T* dst = x + (b * channels + c) * length;
        const T* src = row + b * out_len;
        for (std::size_t o = 0; o < out_len; ++o) {
          const auto pos = static_cast<std::ptrdiff_t>(o * geo.stride + k) - static_cast<std::ptrdiff_t>(geo.pad_left);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) dst[pos] += src[o];
        }
      }
    }
  }
}

// [B,C,L] <-> [C, B*L]
template <typename T>
void batch_to_channel_major(const T* x, std::size_t batch, std::size_t channels, std::size_t length, T* out) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      std::copy_n(x + (b * channels + c) * length, length, out + c * batch * length + b * length);
}

template <typename T>
void channel_major_to_batch_add(const T* m, std::size_t batch, std::size_t channels, std::size_t length, T* x) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      const T* src = m + c * batch * length + b * length;
      T* dst = x + (b * channels + c) * length;
      for (std::size_t l = 0; l < length; ++l) dst[l] += src[l];
    }
}

template <typename T>
void check_bias(const std::optional<Tensor<T>>& bias, std::size_t width, const char* op) {
  if (!bias) return;
  if (bias->rank() != 1 || bias->dim(0) != width) {
    throw DimensionError(std::string(op) + ": bias shape " + shape_string(bias->shape()) + " does not match width " +
                         std::to_string(width));
  }
}

template <typename T>
T sigmoid_scalar(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> unary(const Tensor<T>& x, const char* op, std::vector<T> y, std::vector<T> dydx) {
  return Tensor<T>::make_result(x.shape(), std::move(y), op, {x},
                                [d = std::move(dydx)](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  auto& gx = *in[0];
                                  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * d[i];
                                });
}

}  // namespace

Conv1dGeometry same_geometry(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (stride == 0) throw ValidationError("conv stride must be >= 1");
  const std::size_t out = (length + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t total = needed > length ? needed - length : 0;
  return {stride, total / 2, total - total / 2};
}

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dGeometry& geo) {
  if (geo.stride == 0) throw ValidationError("conv1d: stride must be >= 1");
  const std::size_t padded = length + geo.pad_left + geo.pad_right;
  if (kernel > padded) {
    throw DimensionError("conv1d: kernel size " + std::to_string(kernel) + " exceeds padded input length " +
                         std::to_string(padded));
  }
  return (padded - kernel) / geo.stride + 1;
}

std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, const Conv1dGeometry& geo) {
  if (geo.stride == 0) throw ValidationError("conv1d_transpose: stride must be >= 1");
  const std::size_t full = (length - 1) * geo.stride + kernel;
  if (geo.pad_left + geo.pad_right >= full) {
    throw DimensionError("conv1d_transpose: crop " + std::to_string(geo.pad_left + geo.pad_right) +
                         " leaves no output from length " + std::to_string(full));
  }
  return full - geo.pad_left - geo.pad_right;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  return Tensor<T>::make_result(a.shape(), std::move(y), "add", {a, b},
                                [](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  for (auto* gi : in)
                                    if (gi)
                                      for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
                                });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  return Tensor<T>::make_result(a.shape(), std::move(y), "sub", {a, b},
                                [](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  if (in[0])
                                    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                                  if (in[1])
                                    for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  return Tensor<T>::make_result(a.shape(), std::move(y), "mul", {a, b},
                                [a, b](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  if (in[0])
                                    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * b[i];
                                  if (in[1])
                                    for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] += g[i] * a[i];
                                });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * factor;
  return Tensor<T>::make_result(a.shape(), std::move(y), "scale", {a},
                                [factor](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * factor;
                                });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * a[i];
  return Tensor<T>::make_result(a.shape(), std::move(y), "square", {a},
                                [a](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += T(2) * a[i] * g[i];
                                });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  return Tensor<T>::make_result(Shape{1}, {s}, "sum", {a},
                                [](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  for (auto& v : *in[0]) v += g[0];
                                });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  const T inv = T(1) / static_cast<T>(a.size());
  return Tensor<T>::make_result(Shape{1}, {s * inv}, "mean", {a},
                                [inv](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  for (auto& v : *in[0]) v += g[0] * inv;
                                });
}

template <typename T>
Tensor<T> row_sum(const Tensor<T>& a) {
  const std::size_t rows = a.dim(0);
  const std::size_t width = a.size() / rows;
  std::vector<T> y(rows, T(0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < width; ++i) y[r] += a[r * width + i];
  return Tensor<T>::make_result(Shape{rows}, std::move(y), "row_sum", {a},
                                [width](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  auto& ga = *in[0];
                                  for (std::size_t r = 0; r < g.size(); ++r)
                                    for (std::size_t i = 0; i < width; ++i) ga[r * width + i] += g[r];
                                });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  std::vector<T> y(a.data().begin(), a.data().end());
  return Tensor<T>::make_result(std::move(shape), std::move(y), "reshape", {a},
                                [](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                                });
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const std::optional<Tensor<T>>& bias) {
  require_rank(x.shape(), 2, "dense", "input");
  require_rank(w.shape(), 2, "dense", "weight");
  const std::size_t B = x.dim(0), I = x.dim(1), O = w.dim(1);
  if (w.dim(0) != I) {
    throw DimensionError("dense: input axis 1 (size " + std::to_string(I) + ") does not match weight axis 0 (size " +
                         std::to_string(w.dim(0)) + ")");
  }
  check_bias(bias, O, "dense");
  std::vector<T> y(B * O);
  MapMat<T> Y(y.data(), B, O);
  Y.noalias() = CMapMat<T>(x.data().data(), B, I) * CMapMat<T>(w.data().data(), I, O);
  if (bias) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < O; ++o) y[b * O + o] += (*bias)[o];
  }
  std::vector<Tensor<T>> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  return Tensor<T>::make_result(
      Shape{B, O}, std::move(y), "dense", std::move(inputs),
      [x, w, B, I, O](std::span<const T> g, std::span<std::vector<T>* const> in) {
        CMapMat<T> G(g.data(), B, O);
        if (in[0]) MapMat<T>(in[0]->data(), B, I).noalias() += G * CMapMat<T>(w.data().data(), I, O).transpose();
        if (in[1]) MapMat<T>(in[1]->data(), I, O).noalias() += CMapMat<T>(x.data().data(), B, I).transpose() * G;
        if (in.size() > 2 && in[2]) {
          auto& gb = *in[2];
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t o = 0; o < O; ++o) gb[o] += g[b * O + o];
        }
      });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernel, const Conv1dGeometry& geo,
                 const std::optional<Tensor<T>>& bias) {
  require_rank(x.shape(), 3, "conv1d", "input");
  require_rank(kernel.shape(), 3, "conv1d", "kernel");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t F = kernel.dim(0), K = kernel.dim(2);
  if (kernel.dim(1) != C) {
    throw DimensionError("conv1d: input channel axis 1 (size " + std::to_string(C) +
                         ") does not match kernel axis 1 (size " + std::to_string(kernel.dim(1)) + ")");
  }
  check_bias(bias, F, "conv1d");
  const std::size_t Lo = conv1d_output_length(L, K, geo);
  const std::size_t N = B * Lo;

  auto col = std::make_shared<std::vector<T>>(C * K * N);
  im2col(x.data().data(), B, C, L, K, geo, Lo, col->data());
  RowMat<T> Y = CMapMat<T>(kernel.data().data(), F, C * K) * CMapMat<T>(col->data(), C * K, N);

  std::vector<T> y(B * F * Lo);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) {
      const T shift = bias ? (*bias)[f] : T(0);
      const T* src = Y.data() + f * N + b * Lo;
      T* dst = y.data() + (b * F + f) * Lo;
      for (std::size_t o = 0; o < Lo; ++o) dst[o] = src[o] + shift;
    }

  std::vector<Tensor<T>> inputs{x, kernel};
  if (bias) inputs.push_back(*bias);
  return Tensor<T>::make_result(
      Shape{B, F, Lo}, std::move(y), "conv1d", std::move(inputs),
      [kernel, col, geo, B, C, L, F, K, Lo, N](std::span<const T> g, std::span<std::vector<T>* const> in) {
        RowMat<T> G(F, N);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t f = 0; f < F; ++f) std::copy_n(g.data() + (b * F + f) * Lo, Lo, G.data() + f * N + b * Lo);
        if (in[1]) MapMat<T>(in[1]->data(), F, C * K).noalias() += G * CMapMat<T>(col->data(), C * K, N).transpose();
        if (in.size() > 2 && in[2]) {
          for (std::size_t f = 0; f < F; ++f) (*in[2])[f] += G.row(f).sum();
        }
        if (in[0]) {
          RowMat<T> dcol = CMapMat<T>(kernel.data().data(), F, C * K).transpose() * G;
          col2im(dcol.data(), B, C, L, K, geo, Lo, in[0]->data());
        }
      });
}

template <typename T>
Tensor<T> conv1d_transpose(const Tensor<T>& x, const Tensor<T>& kernel, const Conv1dGeometry& geo,
                           const std::optional<Tensor<T>>& bias) {
  require_rank(x.shape(), 3, "conv1d_transpose", "input");
  require_rank(kernel.shape(), 3, "conv1d_transpose", "kernel");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t F = kernel.dim(1), K = kernel.dim(2);
  if (kernel.dim(0) != C) {
    throw DimensionError("conv1d_transpose: input channel axis 1 (size " + std::to_string(C) +
                         ") does not match kernel axis 0 (size " + std::to_string(kernel.dim(0)) + ")");
  }
  check_bias(bias, F, "conv1d_transpose");
  const std::size_t Lout = conv1d_transpose_output_length(L, K, geo);
  const std::size_t N = B * L;

  std::vector<T> xm(C * N);
  batch_to_channel_major(x.data().data(), B, C, L, xm.data());
  RowMat<T> dcol = CMapMat<T>(kernel.data().data(), C, F * K).transpose() * CMapMat<T>(xm.data(), C, N);
  std::vector<T> y(B * F * Lout, T(0));
  col2im(dcol.data(), B, F, Lout, K, geo, L, y.data());
  if (bias) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f) {
        T* dst = y.data() + (b * F + f) * Lout;
        for (std::size_t o = 0; o < Lout; ++o) dst[o] += (*bias)[f];
      }
  }

  std::vector<Tensor<T>> inputs{x, kernel};
  if (bias) inputs.push_back(*bias);
  return Tensor<T>::make_result(
      Shape{B, F, Lout}, std::move(y), "conv1d_transpose", std::move(inputs),
      [kernel, xm = std::move(xm), geo, B, C, L, F, K, Lout, N](std::span<const T> g,
                                                                std::span<std::vector<T>* const> in) {
        RowMat<T> G(F * K, N);
        im2col(g.data(), B, F, Lout, K, geo, L, G.data());
        if (in[1]) MapMat<T>(in[1]->data(), C, F * K).noalias() += CMapMat<T>(xm.data(), C, N) * G.transpose();
        if (in.size() > 2 && in[2]) {
          auto& gb = *in[2];
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t f = 0; f < F; ++f) {
              const T* src = g.data() + (b * F + f) * Lout;
              T s = 0;
              for (std::size_t o = 0; o < Lout; ++o) s += src[o];
              gb[f] += s;
            }
        }
        if (in[0]) {
          RowMat<T> dx = CMapMat<T>(kernel.data().data(), C, F * K) * G;
          channel_major_to_batch_add(dx.data(), B, C, L, in[0]->data());
        }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  const auto pos = positive_mask<T>(x.data());
  std::vector<T> y(x.size()), d(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = pos[i] ? x[i] : T(0);
    d[i] = pos[i] ? T(1) : T(0);
  }
  return unary(x, "relu", std::move(y), std::move(d));
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double alpha) {
  const T a = static_cast<T>(alpha);
  const T a_back = g_backward_fault.load() ? static_cast<T>(alpha * 1.5) : a;
  const auto pos = positive_mask<T>(x.data());
  std::vector<T> y(x.size()), d(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = pos[i] ? x[i] : a * x[i];
    d[i] = pos[i] ? T(1) : a_back;
  }
  return unary(x, "leaky_relu", std::move(y), std::move(d));
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  std::vector<T> y(x.size()), d(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = std::tanh(x[i]);
    d[i] = T(1) - y[i] * y[i];
  }
  return unary(x, "tanh", std::move(y), std::move(d));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> y(x.size()), d(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = sigmoid_scalar(x[i]);
    d[i] = y[i] * (T(1) - y[i]);
  }
  return unary(x, "sigmoid", std::move(y), std::move(d));
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation act) {
  switch (act.kind) {
    case ActivationKind::relu: return relu(x);
    case ActivationKind::leaky_relu: return leaky_relu(x, act.alpha);
    case ActivationKind::tanh: return tanh(x);
    case ActivationKind::sigmoid: return sigmoid(x);
  }
  throw ValidationError("activation: unknown kind");
}

template <typename T>
Tensor<T> leaky_relu_slope(const Tensor<T>& x, double alpha) {
  const auto pos = positive_mask<T>(x.data());
  std::vector<T> d(x.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pos[i] ? T(1) : static_cast<T>(alpha);
  return Tensor<T>(x.shape(), std::move(d), false);
}

template <typename T>
Tensor<T> phase_shuffle(const Tensor<T>& x, std::span<const int> shifts) {
  require_rank(x.shape(), 3, "phase_shuffle", "input");
  const std::size_t rows = x.dim(0) * x.dim(1), L = x.dim(2);
  if (shifts.size() != rows) {
    throw DimensionError("phase_shuffle: expected " + std::to_string(rows) + " shifts, got " +
                         std::to_string(shifts.size()));
  }
  const auto n = static_cast<std::ptrdiff_t>(L);
  // Source index for each output sample of each row.
  auto source = std::make_shared<std::vector<std::uint32_t>>(rows * L);
  for (std::size_t r = 0; r < rows; ++r) {
    const int s = shifts[r];
    if (std::abs(s) >= static_cast<int>(L)) {
      throw ValidationError("phase_shuffle: shift " + std::to_string(s) + " must be smaller than length " +
                            std::to_string(L));
    }
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      std::ptrdiff_t j = i - s;
      if (j < 0) j = -j;
      if (j >= n) j = 2 * (n - 1) - j;
      (*source)[r * L + static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(j);
    }
  }
  std::vector<T> y(x.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < L; ++i) y[r * L + i] = x[r * L + (*source)[r * L + i]];
  return Tensor<T>::make_result(x.shape(), std::move(y), "phase_shuffle", {x},
                                [source, L](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  auto& gx = *in[0];
                                  for (std::size_t k = 0; k < g.size(); ++k) {
                                    gx[(k / L) * L + (*source)[k]] += g[k];
                                  }
                                });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> targets) {
  require_rank(logits.shape(), 2, "softmax_cross_entropy", "logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (targets.size() != B) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for batch " +
                         std::to_string(B));
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= K) {
      throw ValidationError("softmax_cross_entropy: class index " + std::to_string(t) + " outside [0, " +
                            std::to_string(K) + ")");
    }
  }
  std::vector<T> prob(B * K);
  T loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const T* row = logits.data().data() + b * K;
    const T mx = *std::max_element(row, row + K);
    T z = 0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
    const T lse = mx + std::log(z);
    for (std::size_t k = 0; k < K; ++k) prob[b * K + k] = std::exp(row[k] - lse);
    loss += lse - row[targets[b]];
  }
  loss /= static_cast<T>(B);
  std::vector<int> tgt(targets.begin(), targets.end());
  return Tensor<T>::make_result(Shape{1}, {loss}, "softmax_cross_entropy", {logits},
                                [prob = std::move(prob), tgt = std::move(tgt), B, K](
                                    std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  auto& gl = *in[0];
                                  const T s = g[0] / static_cast<T>(B);
                                  for (std::size_t b = 0; b < B; ++b)
                                    for (std::size_t k = 0; k < K; ++k) {
                                      const T onehot = static_cast<int>(k) == tgt[b] ? T(1) : T(0);
                                      gl[b * K + k] += s * (prob[b * K + k] - onehot);
                                    }
                                });
}

template <typename T>
Tensor<T> sigmoid_cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets) {
  require_same_shape(logits.shape(), targets.shape(), "sigmoid_cross_entropy");
  for (T t : targets.data()) {
    if (t != T(0) && t != T(1)) {
      throw ValidationError("sigmoid_cross_entropy: targets must be 0 or 1, got " + std::to_string(t));
    }
  }
  const std::size_t n = logits.size();
  T loss = 0;
  std::vector<T> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T l = logits[i], t = targets[i];
    loss += std::max(l, T(0)) - l * t + std::log1p(std::exp(-std::abs(l)));
    d[i] = sigmoid_scalar(l) - t;
  }
  const T inv = T(1) / static_cast<T>(n);
  return Tensor<T>::make_result(Shape{1}, {loss * inv}, "sigmoid_cross_entropy", {logits, targets},
                                [d = std::move(d), inv](std::span<const T> g, std::span<std::vector<T>* const> in) {
                                  // Targets are data, never differentiated.
                                  if (!in[0]) return;
                                  auto& gl = *in[0];
                                  for (std::size_t i = 0; i < d.size(); ++i) gl[i] += g[0] * inv * d[i];
                                });
}

namespace testing {
void set_backward_fault(bool on) { g_backward_fault.store(on); }
bool backward_fault() { return g_backward_fault.load(); }

ActivationPattern::ActivationPattern() { g_pattern = {}; }
ActivationPattern::~ActivationPattern() { g_pattern = {}; }

void ActivationPattern::record() {
  g_pattern.masks.clear();
  g_pattern.cursor = 0;
  g_pattern.mode = PatternStore::Mode::record;
}

void ActivationPattern::replay() {
  g_pattern.cursor = 0;
  g_pattern.mode = PatternStore::Mode::replay;
}
}  // namespace testing

#define LEXIGAN_INSTANTIATE_OPS(T)                                                                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                                               \
  template Tensor<T> square(const Tensor<T>&);                                                                 \
  template Tensor<T> sum(const Tensor<T>&);                                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                                   \
  template Tensor<T> row_sum(const Tensor<T>&);                                                                \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                         \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const std::optional<Tensor<T>>&);               \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Conv1dGeometry&,                         \
                            const std::optional<Tensor<T>>&);                                                  \
  template Tensor<T> conv1d_transpose(const Tensor<T>&, const Tensor<T>&, const Conv1dGeometry&,               \
                                      const std::optional<Tensor<T>>&);                                        \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                                   \
  template Tensor<T> leaky_relu(const Tensor<T>&, double);                                                     \
  template Tensor<T> tanh(const Tensor<T>&);                                                                   \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                                \
  template Tensor<T> leaky_relu_slope(const Tensor<T>&, double);                                               \
  template Tensor<T> phase_shuffle(const Tensor<T>&, std::span<const int>);                                    \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);                            \
  template Tensor<T> sigmoid_cross_entropy(const Tensor<T>&, const Tensor<T>&);

LEXIGAN_INSTANTIATE_OPS(float)
LEXIGAN_INSTANTIATE_OPS(double)

#undef LEXIGAN_INSTANTIATE_OPS

}  // namespace lexigan::ad
