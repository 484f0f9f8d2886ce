#include "rawnet/mulaw.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rawnet/error.hpp"

namespace rawnet::mulaw {

Real compress(Real x) {
  const Real a = std::min(std::fabs(x), Real{1});
  return std::copysign(std::log1p(kMu * a) / std::log1p(kMu), x);
}

Real expand(Real y) {
  const Real a = std::min(std::fabs(y), Real{1});
  return std::copysign(std::expm1(a * std::log1p(kMu)) / kMu, y);
}

int encode(Real x) {
  if (std::isnan(x)) throw NumericError("mulaw encode: NaN input");
  const Real f = compress(std::clamp(x, Real{-1}, Real{1}));
  const auto level = static_cast<int>(std::floor((f + 1) / 2 * kLevels));
  return std::clamp(level, 0, kLevels - 1);
}

Real decode(int level) {
  if (level < 0 || level >= kLevels)
    throw IndexError("mulaw decode: level " + std::to_string(level) + " outside [0, 255]");
  const Real y = 2 * (static_cast<Real>(level) + Real{0.5}) / kLevels - 1;
  return expand(y);
}

}  // namespace rawnet::mulaw
