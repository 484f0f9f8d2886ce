#pragma once

// Differentiable layer ops. Every op takes an optional Tape; when the tape is
// non-null and some input requires a gradient, the op records its backward
// rule. Without a tape the ops are plain inference kernels.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "rawnet/tape.hpp"
#include "rawnet/tensor.hpp"

namespace rawnet {

enum class Activation { none, tanh, relu, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

/// GRU weights with the three gates stacked in z, r, h order:
/// W is [3m x n], U is [3m x m], b is [3m].
struct GruParams {
  Tensor W;
  Tensor U;
  Tensor b;
  std::size_t hidden() const { return U.dim(1); }
  std::size_t input() const { return W.dim(1); }
};

/// out = a1 * tanh(W1 x + b1) + a2 * tanh(W2 x + b2)
struct DualFcParams {
  Tensor W1, W2;
  Tensor a1, a2;
  Tensor b1, b2;
};

/// Index into [0, n) for position i of a signal mirrored about its end
/// samples (edge sample not repeated). Folds repeatedly for long pads.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

std::vector<Real> softmax(std::span<const Real> logits);

namespace ops {

/// x [C_in x L], w [C_out x C_in x k], b [C_out] -> [C_out x ((L - k) / stride + 1)].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, Tape* tape = nullptr);

/// Non-overlapping max pooling along time, x [C x L] -> [C x L / width].
/// Ties route the gradient to the first maximal position.
Tensor maxpool1d(const Tensor& x, std::size_t width, Tape* tape = nullptr);

Tensor activate(const Tensor& x, Activation act, Tape* tape = nullptr);

/// act(W x + b) for x [n], W [m x n], b [m].
Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b, Activation act, Tape* tape = nullptr);

/// dense applied to each row of X [R x n] -> [R x m].
Tensor dense_rows(const Tensor& X, const Tensor& W, const Tensor& b, Activation act, Tape* tape = nullptr);

/// One GRU update; h_new = (1 - z) * h + z * tanh(W_h x + U_h (r * h) + b_h).
Tensor gru_step(const Tensor& x, const Tensor& h, const GruParams& p, Tape* tape = nullptr);

/// Row `level` of E [V x d].
Tensor embedding(int level, const Tensor& E, Tape* tape = nullptr);

Tensor dualfc(const Tensor& x, const DualFcParams& p, Tape* tape = nullptr);

struct CrossEntropy {
  Tensor loss;  // scalar
  std::vector<Real> probs;
};

/// Softmax over the logits (max-subtracted) and -ln p[target].
CrossEntropy softmax_cross_entropy(const Tensor& logits, int target, Tape* tape = nullptr);

Tensor concat(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor row(const Tensor& X, std::size_t i, Tape* tape = nullptr);
Tensor stack_rows(const std::vector<Tensor>& rows, Tape* tape = nullptr);
Tensor transpose(const Tensor& X, Tape* tape = nullptr);

/// Reflect-pads each row of X [C x L] along time.
Tensor reflect_pad(const Tensor& X, std::size_t left, std::size_t right, Tape* tape = nullptr);

/// Mean of scalar tensors.
Tensor mean(const std::vector<Tensor>& scalars, Tape* tape = nullptr);

/// Sum over i of x[i] * weights[i]; weights are constants.
Tensor dot(const Tensor& x, std::span<const Real> weights, Tape* tape = nullptr);

}  // namespace ops
}  // namespace rawnet
