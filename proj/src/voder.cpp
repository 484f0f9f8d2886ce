#include "rawnet/voder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rawnet/error.hpp"
#include "rawnet/kernels.hpp"
#include "rawnet/mulaw.hpp"
#include "rawnet/ops.hpp"

namespace rawnet {

SamplerKind parse_sampler(std::string_view name) {
  if (name == "argmax") return SamplerKind::argmax;
  if (name == "multinomial") return SamplerKind::multinomial;
  if (name == "conditional") return SamplerKind::conditional;
  if (name == "pitch_correlation" || name == "pitch-correlation") return SamplerKind::pitch_correlation;
  throw ConfigError("unknown sampler '" + std::string(name) + "'");
}

std::string_view sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::argmax: return "argmax";
    case SamplerKind::multinomial: return "multinomial";
    case SamplerKind::conditional: return "conditional";
    case SamplerKind::pitch_correlation: return "pitch_correlation";
  }
  return "argmax";
}

void SamplerConfig::validate() const {
  if (!(c > 0)) throw ConfigError("sampler c must be > 0");
  if (!(pc_gain >= 0)) throw ConfigError("sampler pc_gain must be >= 0");
}

VoderState VoderState::initial(const VoderConfig& cfg) {
  VoderState s;
  s.h1.assign(cfg.gru1_hidden, 0);
  s.h2.assign(cfg.gru2_hidden, 0);
  return s;
}

VoderWeights::VoderWeights(const ModelParams& params)
    : embed(params.at("voder.embed")),
      gru1{params.at("voder.gru1.W"), params.at("voder.gru1.U"), params.at("voder.gru1.b")},
      gru2{params.at("voder.gru2.W"), params.at("voder.gru2.U"), params.at("voder.gru2.b")},
      dualfc{params.at("voder.dualfc.W1"), params.at("voder.dualfc.W2"), params.at("voder.dualfc.a1"),
             params.at("voder.dualfc.a2"),  params.at("voder.dualfc.b1"), params.at("voder.dualfc.b2")} {}

Tensor condition_features(const Tensor& feats, const ModelParams& params, Tape* tape) {
  const auto& cfg = params.config.voder;
  if (feats.rank() != 2 || feats.dim(1) != params.config.coder.feat_dim)
    throw ShapeError("condition_features: features of shape " + shape_str(feats.shape()) + " but model feat_dim is " +
                     std::to_string(params.config.coder.feat_dim));
  const std::size_t pad = cfg.cond_kernel / 2;
  Tensor x = ops::transpose(feats, tape);  // [feat x F]
  for (int i = 0; i < 2; ++i) {
    const std::string p = "voder.cond_conv" + std::to_string(i);
    x = ops::reflect_pad(x, pad, pad, tape);
    x = ops::conv1d(x, params.at(p + ".w"), params.at(p + ".b"), 1, tape);
    x = ops::activate(x, Activation::tanh, tape);
  }
  x = ops::transpose(x, tape);  // [F x channels]
  for (int i = 0; i < 2; ++i) {
    const std::string p = "voder.cond_dense" + std::to_string(i);
    x = ops::dense_rows(x, params.at(p + ".W"), params.at(p + ".b"), Activation::tanh, tape);
  }
  return x;
}

std::vector<Real> upsample_repeat(std::span<const Real> cond, std::size_t n_frames, std::size_t dim, std::size_t K) {
  if (K == 0) throw ConfigError("upsample_repeat: K must be >= 1");
  if (cond.size() != n_frames * dim) throw ShapeError("upsample_repeat: buffer does not match n_frames x dim");
  std::vector<Real> out(n_frames * K * dim);
  for (std::size_t t = 0; t < n_frames * K; ++t)
    std::copy_n(cond.begin() + static_cast<std::ptrdiff_t>((t / K) * dim), dim,
                out.begin() + static_cast<std::ptrdiff_t>(t * dim));
  return out;
}

StepResult voder_step(const VoderState& state, std::span<const Real> cond_t, const ModelParams& params) {
  const auto& cfg = params.config.voder;
  if (cond_t.size() != cfg.cond_dim)
    throw ShapeError("voder_step: conditioning vector has " + std::to_string(cond_t.size()) + " values, expected " +
                     std::to_string(cfg.cond_dim));
  if (state.h1.size() != cfg.gru1_hidden || state.h2.size() != cfg.gru2_hidden)
    throw ShapeError("voder_step: state hidden sizes do not match the model");
  const VoderWeights w(params);
  Tensor x = ops::concat(ops::embedding(state.prev_level, w.embed),
                         Tensor({cond_t.size()}, std::vector<Real>(cond_t.begin(), cond_t.end())));
  Tensor h1 = ops::gru_step(x, Tensor({cfg.gru1_hidden}, state.h1), w.gru1);
  Tensor h2 = ops::gru_step(h1, Tensor({cfg.gru2_hidden}, state.h2), w.gru2);
  StepResult out{ops::dualfc(h2, w.dualfc), state};
  out.state.h1.assign(h1.values().begin(), h1.values().end());
  out.state.h2.assign(h2.values().begin(), h2.values().end());
  if (++out.state.position == params.config.frame_size()) {
    out.state.position = 0;
    ++out.state.frame;
  }
  return out;
}

int sample_level(std::span<const Real> logits, const SamplerConfig& sampler, const PitchFrame* pitch, Rng& rng) {
  if (logits.empty()) throw ShapeError("sample_level: empty logits");
  if (sampler.strategy == SamplerKind::argmax)
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());

  Real scale = 1;
  if (sampler.needs_pitch()) {
    if (pitch == nullptr)
      throw ConfigError(std::string("sampler '") + std::string(sampler_name(sampler.strategy)) +
                        "' needs pitch information");
    if (sampler.strategy == SamplerKind::conditional)
      scale = pitch->voiced ? sampler.c : Real{1};
    else
      scale = 1 + sampler.pc_gain * pitch->correlation;
  }
  std::vector<Real> scaled(logits.begin(), logits.end());
  for (auto& v : scaled) v *= scale;
  const auto probs = softmax(scaled);
  std::uniform_real_distribution<Real> uniform(0, 1);
  const Real u = uniform(rng);
  Real cum = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

namespace {

inline Real sigmoid(Real v) { return Real{1} / (Real{1} + std::exp(-v)); }

// GRU update given the input-side pre-activations `a` (W x + b, 3m values).
void gru_update(std::span<const Real> a, std::span<const Real> U, std::span<Real> h, std::vector<Real>& scratch) {
  const std::size_t m = h.size();
  scratch.resize(5 * m);
  std::span<Real> u(scratch.data(), 2 * m), z(scratch.data() + 2 * m, m), rh(scratch.data() + 3 * m, m),
      uc(scratch.data() + 4 * m, m);
  kernels::gemv(U.subspan(0, 2 * m * m), 2 * m, m, h, {}, u);
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = sigmoid(a[i] + u[i]);
    rh[i] = sigmoid(a[m + i] + u[m + i]) * h[i];
  }
  kernels::gemv(U.subspan(2 * m * m, m * m), m, m, rh, {}, uc);
  for (std::size_t i = 0; i < m; ++i) {
    const Real c = std::tanh(a[2 * m + i] + uc[i]);
    h[i] = (1 - z[i]) * h[i] + z[i] * c;
  }
}

void check_synthesis_inputs(const FeatureMatrix& feats, const ModelParams& params, const SamplerConfig& sampler,
                            const PitchInfo* pitch) {
  sampler.validate();
  if (feats.n_frames == 0) throw InputTooShortError("synthesize: feature matrix has no frames");
  if (feats.feat_dim != params.config.coder.feat_dim)
    throw ShapeError("synthesize: feature dim " + std::to_string(feats.feat_dim) + " but model expects " +
                     std::to_string(params.config.coder.feat_dim));
  if (feats.frame_size != 0 && feats.frame_size != params.config.frame_size())
    throw ShapeError("synthesize: feature frame size " + std::to_string(feats.frame_size) + " but model uses " +
                     std::to_string(params.config.frame_size()));
  if (sampler.needs_pitch()) {
    if (pitch == nullptr)
      throw ConfigError(std::string("sampler '") + std::string(sampler_name(sampler.strategy)) +
                        "' needs pitch information");
    if (pitch->size() < feats.n_frames)
      throw ShapeError("synthesize: pitch track has " + std::to_string(pitch->size()) + " frames, features have " +
                       std::to_string(feats.n_frames));
  }
}

}  // namespace

AudioClip synthesize(const FeatureMatrix& feats, const ModelParams& params, const SamplerConfig& sampler,
                     const PitchInfo* pitch) {
  check_synthesis_inputs(feats, params, sampler, pitch);
  const auto& cfg = params.config.voder;
  const std::size_t K = params.config.frame_size();
  const std::size_t F = feats.n_frames;
  const std::size_t E = cfg.embed_dim, C = cfg.cond_dim, m1 = cfg.gru1_hidden, m2 = cfg.gru2_hidden;
  const std::size_t in1 = E + C;
  const VoderWeights w(params);

  Tensor cond = condition_features(feats.as_tensor(), params);
  auto W1 = w.gru1.W.values();
  auto b1 = w.gru1.b.values();

  // Input projections of gru1 split into a per-level table (embedding part)
  // and a per-frame table (conditioning part plus bias).
  std::vector<Real> level_proj(cfg.levels * 3 * m1);
  auto table = w.embed.values();
  for (std::size_t l = 0; l < cfg.levels; ++l)
    for (std::size_t i = 0; i < 3 * m1; ++i) {
      Real acc = 0;
      for (std::size_t j = 0; j < E; ++j) acc += W1[i * in1 + j] * table[l * E + j];
      level_proj[l * 3 * m1 + i] = acc;
    }
  std::vector<Real> frame_proj(F * 3 * m1);
  auto cv = cond.values();
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t i = 0; i < 3 * m1; ++i) {
      Real acc = b1[i];
      for (std::size_t j = 0; j < C; ++j) acc += W1[i * in1 + E + j] * cv[f * C + j];
      frame_proj[f * 3 * m1 + i] = acc;
    }

  VoderState state = VoderState::initial(cfg);
  Rng rng(sampler.seed);
  std::vector<Real> a1(3 * m1), a2(3 * m2), t1(cfg.levels), t2(cfg.levels), logits(cfg.levels), scratch;
  auto U1 = w.gru1.U.values();
  auto U2 = w.gru2.U.values();
  auto da1 = w.dualfc.a1.values(), da2 = w.dualfc.a2.values();

  AudioClip out;
  out.sample_rate = feats.sample_rate;
  out.samples.resize(F * K);
  for (std::size_t t = 0; t < F * K; ++t) {
    const std::size_t f = t / K;
    const Real* lp = level_proj.data() + static_cast<std::size_t>(state.prev_level) * 3 * m1;
    const Real* fp = frame_proj.data() + f * 3 * m1;
    for (std::size_t i = 0; i < 3 * m1; ++i) a1[i] = lp[i] + fp[i];
    gru_update(a1, U1, state.h1, scratch);

    kernels::gemv(w.gru2.W.values(), 3 * m2, m1, state.h1, w.gru2.b.values(), a2);
    gru_update(a2, U2, state.h2, scratch);

    kernels::gemv(w.dualfc.W1.values(), cfg.levels, m2, state.h2, w.dualfc.b1.values(), t1);
    kernels::gemv(w.dualfc.W2.values(), cfg.levels, m2, state.h2, w.dualfc.b2.values(), t2);
    for (std::size_t i = 0; i < cfg.levels; ++i) logits[i] = da1[i] * std::tanh(t1[i]) + da2[i] * std::tanh(t2[i]);

    const PitchFrame* pf = pitch != nullptr ? &(*pitch)[f] : nullptr;
    state.prev_level = sample_level(logits, sampler, pf, rng);
    out.samples[t] = mulaw::decode(state.prev_level);
  }
  return out;
}

AudioClip synthesize_reference(const FeatureMatrix& feats, const ModelParams& params, const SamplerConfig& sampler,
                               const PitchInfo* pitch) {
  check_synthesis_inputs(feats, params, sampler, pitch);
  const std::size_t K = params.config.frame_size();
  const std::size_t C = params.config.voder.cond_dim;
  Tensor cond = condition_features(feats.as_tensor(), params);
  const auto up = upsample_repeat(cond.values(), feats.n_frames, C, K);

  VoderState state = VoderState::initial(params.config.voder);
  Rng rng(sampler.seed);
  AudioClip out;
  out.sample_rate = feats.sample_rate;
  out.samples.resize(feats.n_frames * K);
  for (std::size_t t = 0; t < out.samples.size(); ++t) {
    const std::size_t f = state.frame;
    auto step = voder_step(state, std::span(up).subspan(t * C, C), params);
    state = std::move(step.state);
    const PitchFrame* pf = pitch != nullptr ? &(*pitch)[f] : nullptr;
    state.prev_level = sample_level(step.logits.values(), sampler, pf, rng);
    out.samples[t] = mulaw::decode(state.prev_level);
  }
  return out;
}

FeatureMatrix quantize_f32(FeatureMatrix feats) {
  for (auto& v : feats.values) v = static_cast<Real>(static_cast<float>(v));
  return feats;
}

AudioClip copy_synthesis(const AudioClip& clip, const ModelParams& params, const SamplerConfig& sampler,
                         const CopySynthesisOptions& opts) {
  const FeatureMatrix feats = quantize_f32(coder_forward(clip, params));
  std::optional<PitchInfo> pitch = opts.pitch;
  if (sampler.needs_pitch() && !pitch) pitch = estimate_pitch(clip, params.config.frame_size());
  AudioClip out = synthesize(feats, params, sampler, pitch ? &*pitch : nullptr);
  if (opts.denoise) out = vad_denoise(out, opts.vad);
  return out;
}

}  // namespace rawnet
