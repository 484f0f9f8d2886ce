#pragma once

#include "rawnet/tensor.hpp"

namespace rawnet::mulaw {

inline constexpr Real kMu = 255.0;
inline constexpr int kLevels = 256;
inline constexpr int kZeroLevel = 128;  // code nearest to silence

/// Companding curve F(x) = sign(x) ln(1 + mu |x|) / ln(1 + mu) on [-1, 1].
Real compress(Real x);
Real expand(Real y);

/// Floor-quantizes F(x) into 256 bins. Inputs outside [-1, 1] are clamped;
/// NaN raises NumericError.
int encode(Real x);

/// Inverse of F evaluated at the center of bin `level`.
Real decode(int level);

}  // namespace rawnet::mulaw
