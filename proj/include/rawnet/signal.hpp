#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rawnet/audio.hpp"
#include "rawnet/tensor.hpp"

namespace rawnet {

using Rng = std::mt19937_64;

/// Gaussian noise added to training inputs, in normalized amplitude units.
struct NoiseConfig {
  Real voder_sigma = 0.2;
  Real coder_sigma = 0.1;
  std::uint64_t seed = 0;
};

/// out[i] = clamp(x[i] + N(0, sigma^2), -1, 1). sigma == 0 returns x unchanged.
std::vector<Real> inject_noise(std::span<const Real> x, Real sigma, Rng& rng);

/// Mean square per frame; the trailing partial frame is averaged over its own length.
std::vector<Real> frame_energy(std::span<const Real> samples, std::size_t frame_size);

struct VadConfig {
  std::size_t frame_size = 160;
  Real threshold_db = -40.0;  // relative to the loudest frame
  std::size_t hangover_frames = 2;
};

/// Per-frame activity: energy within threshold_db of the peak frame, or at
/// most hangover_frames after an active frame.
std::vector<bool> vad_mask(std::span<const Real> samples, const VadConfig& cfg);

/// Zeroes inactive frames; active frames are copied bit-for-bit.
AudioClip vad_denoise(const AudioClip& clip, const VadConfig& cfg);

struct PitchFrame {
  int period = 0;  // samples; 0 when unvoiced
  Real correlation = 0;
  bool voiced = false;
};
using PitchInfo = std::vector<PitchFrame>;

struct PitchConfig {
  std::size_t min_lag = 32;
  std::size_t max_lag = 400;
  Real voicing_threshold = 0.3;
  /// The reported period is the shortest local peak within this fraction of
  /// the global peak, which keeps multiples of the true period from winning.
  Real octave_ratio = 0.95;
};

/// Normalized-autocorrelation pitch tracker on the feature frame grid.
/// Each frame analyses a 2 * max_lag window centred on the frame.
PitchInfo estimate_pitch(const AudioClip& clip, std::size_t frame_size, const PitchConfig& cfg = {});

}  // namespace rawnet
