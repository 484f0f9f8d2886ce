#include "rawnet/kernels.hpp"

#include <algorithm>

namespace rawnet::kernels {

// Loop bodies are shared so the serial and OpenMP variants reduce every
// output element in exactly the same order.
namespace {

inline void gemv_row(std::span<const Real> W, std::size_t cols, std::span<const Real> x,
                     std::span<const Real> b, std::span<Real> y, std::size_t i) {
  const Real* row = W.data() + i * cols;
  const Real* xv = x.data();
  // four interleaved partial sums, combined in a fixed order
  Real a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  std::size_t j = 0;
  for (; j + 4 <= cols; j += 4) {
    a0 += row[j] * xv[j];
    a1 += row[j + 1] * xv[j + 1];
    a2 += row[j + 2] * xv[j + 2];
    a3 += row[j + 3] * xv[j + 3];
  }
  for (; j < cols; ++j) a0 += row[j] * xv[j];
  const Real acc = (a0 + a1) + (a2 + a3);
  y[i] = b.empty() ? acc : b[i] + acc;
}

// dx[lo, hi) += W[:, lo:hi]^T dy, rows visited in order.
inline void gemv_t_block(std::span<const Real> W, std::size_t rows, std::size_t cols,
                         std::span<const Real> dy, std::span<Real> dx, std::size_t lo, std::size_t hi) {
  Real* out = dx.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const Real g = dy[i];
    const Real* row = W.data() + i * cols;
    for (std::size_t j = lo; j < hi; ++j) out[j] += row[j] * g;
  }
}

constexpr std::size_t kColBlock = 64;

inline void outer_row(std::span<const Real> dy, std::span<const Real> x, std::span<Real> dW, std::size_t i) {
  const Real g = dy[i];
  if (g == Real{0}) return;
  Real* row = dW.data() + i * x.size();
  for (std::size_t j = 0; j < x.size(); ++j) row[j] += g * x[j];
}

inline void conv_out_channel(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                             std::span<const Real> b, std::span<Real> y, std::size_t c) {
  const std::size_t lo = d.out_length();
  Real* out = y.data() + c * lo;
  const Real bias = b.empty() ? Real{0} : b[c];
  for (std::size_t t = 0; t < lo; ++t) out[t] = bias;
  for (std::size_t i = 0; i < d.in_channels; ++i) {
    const Real* wk = w.data() + (c * d.in_channels + i) * d.kernel;
    const Real* xi = x.data() + i * d.in_length;
    for (std::size_t t = 0; t < lo; ++t) {
      const Real* xs = xi + t * d.stride;
      Real acc = 0;
      for (std::size_t j = 0; j < d.kernel; ++j) acc += wk[j] * xs[j];
      out[t] += acc;
    }
  }
}

inline void conv_dw_channel(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> dy,
                            std::span<Real> dw, std::span<Real> db, std::size_t c) {
  const std::size_t lo = d.out_length();
  const Real* g = dy.data() + c * lo;
  if (!db.empty()) {
    Real acc = db[c];
    for (std::size_t t = 0; t < lo; ++t) acc += g[t];
    db[c] = acc;
  }
  if (dw.empty()) return;
  for (std::size_t i = 0; i < d.in_channels; ++i) {
    Real* wk = dw.data() + (c * d.in_channels + i) * d.kernel;
    const Real* xi = x.data() + i * d.in_length;
    for (std::size_t j = 0; j < d.kernel; ++j) {
      Real acc = wk[j];
      for (std::size_t t = 0; t < lo; ++t) acc += g[t] * xi[t * d.stride + j];
      wk[j] = acc;
    }
  }
}

inline void conv_dx_channel(const Conv1dDims& d, std::span<const Real> w, std::span<const Real> dy,
                            std::span<Real> dx, std::size_t i) {
  const std::size_t lo = d.out_length();
  Real* xi = dx.data() + i * d.in_length;
  for (std::size_t c = 0; c < d.out_channels; ++c) {
    const Real* wk = w.data() + (c * d.in_channels + i) * d.kernel;
    const Real* g = dy.data() + c * lo;
    for (std::size_t t = 0; t < lo; ++t) {
      const Real gt = g[t];
      Real* xs = xi + t * d.stride;
      for (std::size_t j = 0; j < d.kernel; ++j) xs[j] += wk[j] * gt;
    }
  }
}

std::size_t conv_work(const Conv1dDims& d) {
  return d.in_channels * d.out_channels * d.kernel * d.out_length();
}

}  // namespace

namespace serial {

void gemv(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> x,
          std::span<const Real> b, std::span<Real> y) {
  for (std::size_t i = 0; i < rows; ++i) gemv_row(W, cols, x, b, y, i);
}

void gemv_t_acc(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> dy,
                std::span<Real> dx) {
  gemv_t_block(W, rows, cols, dy, dx, 0, cols);
}

void outer_acc(std::span<const Real> dy, std::span<const Real> x, std::span<Real> dW) {
  for (std::size_t i = 0; i < dy.size(); ++i) outer_row(dy, x, dW, i);
}

void conv1d_forward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> y) {
  for (std::size_t c = 0; c < d.out_channels; ++c) conv_out_channel(d, x, w, b, y, c);
}

void conv1d_backward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                     std::span<const Real> dy, std::span<Real> dx, std::span<Real> dw, std::span<Real> db) {
  if (!dw.empty() || !db.empty())
    for (std::size_t c = 0; c < d.out_channels; ++c) conv_dw_channel(d, x, dy, dw, db, c);
  if (!dx.empty())
    for (std::size_t i = 0; i < d.in_channels; ++i) conv_dx_channel(d, w, dy, dx, i);
}

}  // namespace serial

namespace parallel {

void gemv(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> x,
          std::span<const Real> b, std::span<Real> y) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) gemv_row(W, cols, x, b, y, static_cast<std::size_t>(i));
}

void gemv_t_acc(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> dy,
                std::span<Real> dx) {
  const auto blocks = static_cast<std::ptrdiff_t>((cols + kColBlock - 1) / kColBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < blocks; ++k) {
    const auto lo = static_cast<std::size_t>(k) * kColBlock;
    gemv_t_block(W, rows, cols, dy, dx, lo, std::min(cols, lo + kColBlock));
  }
}

void outer_acc(std::span<const Real> dy, std::span<const Real> x, std::span<Real> dW) {
  const auto n = static_cast<std::ptrdiff_t>(dy.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) outer_row(dy, x, dW, static_cast<std::size_t>(i));
}

void conv1d_forward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> y) {
  const auto n = static_cast<std::ptrdiff_t>(d.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n; ++c) conv_out_channel(d, x, w, b, y, static_cast<std::size_t>(c));
}

void conv1d_backward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                     std::span<const Real> dy, std::span<Real> dx, std::span<Real> dw, std::span<Real> db) {
  const auto co = static_cast<std::ptrdiff_t>(d.out_channels);
  const auto ci = static_cast<std::ptrdiff_t>(d.in_channels);
  if (!dw.empty() || !db.empty()) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < co; ++c) conv_dw_channel(d, x, dy, dw, db, static_cast<std::size_t>(c));
  }
  if (!dx.empty()) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < ci; ++i) conv_dx_channel(d, w, dy, dx, static_cast<std::size_t>(i));
  }
}

}  // namespace parallel

void gemv(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> x,
          std::span<const Real> b, std::span<Real> y) {
  if (rows * cols >= kParallelThreshold)
    parallel::gemv(W, rows, cols, x, b, y);
  else
    serial::gemv(W, rows, cols, x, b, y);
}

void gemv_t_acc(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> dy,
                std::span<Real> dx) {
  if (rows * cols >= kParallelThreshold)
    parallel::gemv_t_acc(W, rows, cols, dy, dx);
  else
    serial::gemv_t_acc(W, rows, cols, dy, dx);
}

void outer_acc(std::span<const Real> dy, std::span<const Real> x, std::span<Real> dW) {
  if (dy.size() * x.size() >= kParallelThreshold)
    parallel::outer_acc(dy, x, dW);
  else
    serial::outer_acc(dy, x, dW);
}

void conv1d_forward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                    std::span<const Real> b, std::span<Real> y) {
  if (conv_work(d) >= kParallelThreshold)
    parallel::conv1d_forward(d, x, w, b, y);
  else
    serial::conv1d_forward(d, x, w, b, y);
}

void conv1d_backward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,
                     std::span<const Real> dy, std::span<Real> dx, std::span<Real> dw, std::span<Real> db) {
  if (conv_work(d) >= kParallelThreshold)
    parallel::conv1d_backward(d, x, w, dy, dx, dw, db);
  else
    serial::conv1d_backward(d, x, w, dy, dx, dw, db);
}

}  // namespace rawnet::kernels
