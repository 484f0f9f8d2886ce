#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rawnet/tape.hpp"
#include "rawnet/tensor.hpp"

namespace rawnet {

struct GradCheckOptions {
  Real eps = 1e-5;
  Real tol = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, denom_floor).
  Real denom_floor = 1e-6;
  /// Check at most this many randomly chosen entries per tensor; 0 = all.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::string name;
  Real max_rel_error = 0;
  std::size_t checked = 0;
  bool passed = false;
  std::string worst;  // "<tensor>[index]" of the largest error
};

/// Builds a scalar loss from tensors it has captured. Called with a tape for
/// the analytic pass and with nullptr for every finite-difference probe.
using LossBuilder = std::function<Tensor(Tape*)>;

/// Compares tape gradients against central differences (f(x+eps) - f(x-eps)) / 2eps
/// for every entry of every named tensor.
GradCheckReport grad_check(std::string name, const LossBuilder& loss,
                           std::vector<std::pair<std::string, Tensor>> tensors, const GradCheckOptions& opts = {});

struct GradCheckSuiteOptions {
  std::uint64_t seed = 7;
  GradCheckOptions check;
  /// Replaces the dense layer's backward with a sign-flipped one; the suite
  /// must then fail.
  bool plant_sign_flip = false;
};

/// One report per layer kind plus the coder stack and the joint coder+voder
/// network on the small gradcheck architecture.
std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckSuiteOptions& opts = {});

}  // namespace rawnet
