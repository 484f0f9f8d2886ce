#pragma once

// Dense linear-algebra and convolution kernels on raw row-major buffers.
//
// Two implementations share every signature: `serial` is the reference and
// `parallel` splits the outermost independent loop across OpenMP threads.
// Each output element is reduced in the same order in both, so results are
// bit-identical. The unqualified functions dispatch on problem size.

#include <cstddef>
#include <span>

#include "rawnet/tensor.hpp"

namespace rawnet::kernels {

/// Geometry of a valid (unpadded) 1-D convolution.
struct Conv1dDims {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;
  std::size_t in_length;
  std::size_t out_length() const { return (in_length - kernel) / stride + 1; }
};

#define RAWNET_KERNEL_DECLS                                                                            \
  /* y = W x + b; W is rows x cols. b may be empty. */                                              \
  void gemv(std::span<const Real> W, std::size_t rows, std::size_t cols, std::span<const Real> x,   \
            std::span<const Real> b, std::span<Real> y);                                            \
  /* dx += W^T dy */                                                                                \
  void gemv_t_acc(std::span<const Real> W, std::size_t rows, std::size_t cols,                      \
                  std::span<const Real> dy, std::span<Real> dx);                                    \
  /* dW += dy x^T */                                                                                \
  void outer_acc(std::span<const Real> dy, std::span<const Real> x, std::span<Real> dW);            \
  void conv1d_forward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,        \
                      std::span<const Real> b, std::span<Real> y);                                  \
  /* Accumulates into dx, dw, db. Any of them may be empty to skip it. */                           \
  void conv1d_backward(const Conv1dDims& d, std::span<const Real> x, std::span<const Real> w,       \
                       std::span<const Real> dy, std::span<Real> dx, std::span<Real> dw,            \
                       std::span<Real> db);

namespace serial {
RAWNET_KERNEL_DECLS
}  // namespace serial

namespace parallel {
RAWNET_KERNEL_DECLS
}  // namespace parallel

RAWNET_KERNEL_DECLS

#undef RAWNET_KERNEL_DECLS

/// Work (multiply-adds) below which dispatch stays serial.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

}  // namespace rawnet::kernels
