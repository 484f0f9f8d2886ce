#include "rawnet/coder.hpp"

#include <string>

#include "rawnet/error.hpp"
#include "rawnet/ops.hpp"

namespace rawnet {

Tensor FeatureMatrix::as_tensor() const { return Tensor({n_frames, feat_dim}, values); }

std::size_t coder_num_frames(std::size_t n_samples, const CoderConfig& cfg) {
  const std::size_t k = cfg.frame_size();
  if (n_samples < k)
    throw InputTooShortError("coder: input of " + std::to_string(n_samples) + " samples is shorter than one frame (" +
                             std::to_string(k) + " samples)");
  return (n_samples + k - 1) / k;
}

std::vector<Real> coder_padded_input(std::span<const Real> samples, const CoderConfig& cfg) {
  const std::size_t n_frames = coder_num_frames(samples.size(), cfg);
  const std::size_t body = n_frames * cfg.frame_size();
  const std::size_t slack = cfg.slack();
  std::vector<Real> padded(slack + body);
  for (std::size_t t = 0; t < padded.size(); ++t) {
    // Index into the tail-extended signal, then into the original samples.
    const std::size_t e = reflect_index(static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(slack), body);
    padded[t] = samples[reflect_index(static_cast<std::ptrdiff_t>(e), samples.size())];
  }
  return padded;
}

Tensor coder_forward(std::span<const Real> samples, const ModelParams& params, Tape* tape) {
  const CoderConfig& cfg = params.config.coder;
  const std::size_t n_frames = coder_num_frames(samples.size(), cfg);
  auto padded = coder_padded_input(samples, cfg);
  const std::size_t len = padded.size();
  Tensor x({1, len}, std::move(padded));

  for (std::size_t i = 0; i < cfg.stack.size(); ++i) {
    const auto& layer = cfg.stack[i];
    if (layer.kind == LayerKind::maxpool) {
      x = ops::maxpool1d(x, layer.kernel, tape);
      continue;
    }
    const std::string p = "coder.conv" + std::to_string(i);
    x = ops::conv1d(x, params.at(p + ".w"), params.at(p + ".b"), layer.stride, tape);
    if (layer.activation != Activation::none) x = ops::activate(x, layer.activation, tape);
  }
  if (x.dim(1) != n_frames)
    throw ShapeError("coder: stack produced " + std::to_string(x.dim(1)) + " frames, expected " +
                     std::to_string(n_frames));

  Tensor frames = ops::transpose(x, tape);  // [F x C]
  frames = ops::dense_rows(frames, params.at("coder.dense.W"), params.at("coder.dense.b"), Activation::tanh, tape);

  const GruParams gru{params.at("coder.gru.W"), params.at("coder.gru.U"), params.at("coder.gru.b")};
  Tensor h({cfg.gru_hidden});
  std::vector<Tensor> hidden;
  hidden.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    h = ops::gru_step(ops::row(frames, f, tape), h, gru, tape);
    hidden.push_back(h);
  }
  Tensor H = ops::stack_rows(hidden, tape);
  return ops::dense_rows(H, params.at("coder.out.W"), params.at("coder.out.b"), Activation::none, tape);
}

FeatureMatrix coder_forward(const AudioClip& clip, const ModelParams& params) {
  Tensor y = coder_forward(clip.samples, params, nullptr);
  FeatureMatrix fm;
  fm.n_frames = y.dim(0);
  fm.feat_dim = y.dim(1);
  fm.frame_size = params.config.frame_size();
  fm.sample_rate = clip.sample_rate;
  fm.values.assign(y.values().begin(), y.values().end());
  return fm;
}

}  // namespace rawnet
