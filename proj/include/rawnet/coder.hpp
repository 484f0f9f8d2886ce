#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rawnet/audio.hpp"
#include "rawnet/model.hpp"
#include "rawnet/tape.hpp"

namespace rawnet {

/// Coder output: one feat_dim vector per frame of frame_size samples.
struct FeatureMatrix {
  std::size_t n_frames = 0;
  std::size_t feat_dim = 0;
  std::size_t frame_size = 0;
  std::uint32_t sample_rate = 16000;
  std::vector<Real> values;  // row-major n_frames x feat_dim

  std::span<const Real> frame(std::size_t f) const { return std::span(values).subspan(f * feat_dim, feat_dim); }
  Tensor as_tensor() const;
  bool operator==(const FeatureMatrix&) const = default;
};

/// ceil(n_samples / frame_size). Throws InputTooShortError below one frame.
std::size_t coder_num_frames(std::size_t n_samples, const CoderConfig& cfg);

/// Samples extended to n_frames * K (tail reflected), then reflected on the
/// left by the stack's slack so every frame's receptive field ends at the
/// frame's last sample.
std::vector<Real> coder_padded_input(std::span<const Real> samples, const CoderConfig& cfg);

/// Differentiable coder: returns [n_frames x feat_dim].
Tensor coder_forward(std::span<const Real> samples, const ModelParams& params, Tape* tape = nullptr);

FeatureMatrix coder_forward(const AudioClip& clip, const ModelParams& params);

}  // namespace rawnet
