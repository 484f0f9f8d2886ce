#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rawnet/audio.hpp"
#include "rawnet/coder.hpp"
#include "rawnet/model.hpp"
#include "rawnet/signal.hpp"
#include "rawnet/tape.hpp"

namespace rawnet {

enum class SamplerKind { argmax, multinomial, conditional, pitch_correlation };

SamplerKind parse_sampler(std::string_view name);
std::string_view sampler_name(SamplerKind kind);

struct SamplerConfig {
  SamplerKind strategy = SamplerKind::argmax;
  Real c = 2.0;        // logit scale for voiced frames (conditional)
  Real pc_gain = 1.0;  // logits scaled by 1 + pc_gain * correlation
  std::uint64_t seed = 0;

  bool needs_pitch() const {
    return strategy == SamplerKind::conditional || strategy == SamplerKind::pitch_correlation;
  }
  void validate() const;
};

/// Recurrent state of one synthesis run.
struct VoderState {
  std::vector<Real> h1;
  std::vector<Real> h2;
  int prev_level = 128;
  std::size_t frame = 0;
  std::size_t position = 0;  // within the current frame

  static VoderState initial(const VoderConfig& cfg);
};

/// Views the voder's weights inside a ModelParams bundle.
struct VoderWeights {
  Tensor embed;
  GruParams gru1;
  GruParams gru2;
  DualFcParams dualfc;
  explicit VoderWeights(const ModelParams& params);
};

/// Two same-length convs (tanh) then two dense layers (tanh): [F x feat] -> [F x cond_dim].
Tensor condition_features(const Tensor& feats, const ModelParams& params, Tape* tape = nullptr);

/// Row t of the result is row t / K of `cond` ([F x d] -> [F*K x d]).
std::vector<Real> upsample_repeat(std::span<const Real> cond, std::size_t n_frames, std::size_t dim, std::size_t K);

struct StepResult {
  Tensor logits;
  VoderState state;
};

/// One autoregressive step: concat(embed(prev_level), cond_t) -> GRU -> GRU -> DualFC.
/// The returned state has updated hiddens and advanced position; prev_level
/// is left for the caller to set once a level has been sampled.
StepResult voder_step(const VoderState& state, std::span<const Real> cond_t, const ModelParams& params);

/// Picks a mu-law level from logits. `pitch` is required for conditional
/// and pitch_correlation strategies.
int sample_level(std::span<const Real> logits, const SamplerConfig& sampler, const PitchFrame* pitch, Rng& rng);

/// Autoregressive generation of n_frames * K samples.
AudioClip synthesize(const FeatureMatrix& feats, const ModelParams& params, const SamplerConfig& sampler,
                     const PitchInfo* pitch = nullptr);

/// Reference implementation of synthesize built on voder_step; much slower.
AudioClip synthesize_reference(const FeatureMatrix& feats, const ModelParams& params, const SamplerConfig& sampler,
                               const PitchInfo* pitch = nullptr);

/// Rounds every value through float32, the precision of feature files.
FeatureMatrix quantize_f32(FeatureMatrix feats);

struct CopySynthesisOptions {
  bool denoise = false;
  VadConfig vad;
  /// Pitch track for pitch-dependent samplers; estimated from the input when absent.
  std::optional<PitchInfo> pitch;
};

/// coder -> (float32 features) -> synthesize -> optional VAD denoise.
AudioClip copy_synthesis(const AudioClip& clip, const ModelParams& params, const SamplerConfig& sampler,
                         const CopySynthesisOptions& opts = {});

}  // namespace rawnet
