#include "rawnet/model.hpp"

#include <cmath>
#include <random>

#include "rawnet/error.hpp"

namespace rawnet {

void LayerSpec::validate() const {
  auto positive = [&](std::size_t v, const char* what) {
    if (v == 0) throw ConfigError(std::string("layer ") + what + " must be >= 1");
  };
  switch (kind) {
    case LayerKind::conv1d:
      positive(in, "in_channels");
      positive(out, "out_channels");
      positive(kernel, "kernel size");
      positive(stride, "stride");
      break;
    case LayerKind::maxpool: positive(kernel, "pool width"); break;
    case LayerKind::dense:
    case LayerKind::dualfc:
      positive(in, "input size");
      positive(out, "output size");
      break;
    case LayerKind::gru:
      positive(in, "input size");
      positive(hidden, "hidden size");
      break;
    case LayerKind::embedding:
      positive(vocab, "vocab size");
      positive(embed_dim, "embed dim");
      break;
  }
}

LayerSpec CoderConfig::conv(std::size_t out, std::size_t kernel, std::size_t stride, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.out = out;
  s.kernel = kernel;
  s.stride = stride;
  s.activation = act;
  return s;
}

LayerSpec CoderConfig::pool(std::size_t width) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.kernel = width;
  return s;
}

std::vector<LayerSpec> CoderConfig::default_stack() {
  return {conv(16, 9, 2), conv(32, 9, 2), conv(64, 9, 2), conv(128, 9, 4), conv(128, 9, 5)};
}

std::size_t CoderConfig::frame_size() const {
  std::size_t k = 1;
  for (const auto& l : stack) k *= l.kind == LayerKind::maxpool ? l.kernel : l.stride;
  return k;
}

std::size_t CoderConfig::required_input(std::size_t n_frames) const {
  std::size_t len = n_frames;
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    if (it->kind == LayerKind::maxpool)
      len *= it->kernel;
    else
      len = (len - 1) * it->stride + it->kernel;
  }
  return len;
}

void CoderConfig::validate() const {
  if (stack.empty()) throw ConfigError("coder stack is empty");
  std::size_t channels = 1;
  bool any_conv = false;
  for (auto l : stack) {
    if (l.kind != LayerKind::conv1d && l.kind != LayerKind::maxpool)
      throw ConfigError("coder stack accepts only conv1d and maxpool layers");
    if (l.kind == LayerKind::conv1d) {
      l.in = channels;
      channels = l.out;
      any_conv = true;
    }
    l.validate();
  }
  if (!any_conv) throw ConfigError("coder stack needs at least one conv1d layer");
  if (dense_dim == 0 || gru_hidden == 0 || feat_dim == 0) throw ConfigError("coder sizes must be >= 1");
}

void VoderConfig::validate() const {
  if (cond_channels == 0 || cond_kernel == 0 || cond_dim == 0 || embed_dim == 0 || gru1_hidden == 0 ||
      gru2_hidden == 0)
    throw ConfigError("voder sizes must be >= 1");
  if (cond_kernel % 2 == 0) throw ConfigError("voder cond_kernel must be odd for same-length convolution");
  if (levels != 256) throw ConfigError("voder output must have 256 levels (mu-law), got " + std::to_string(levels));
}

void ModelConfig::validate() const {
  coder.validate();
  voder.validate();
  if (sample_rate == 0) throw ConfigError("sample_rate must be > 0");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.coder.stack = {CoderConfig::conv(8, 9, 2), CoderConfig::conv(16, 9, 2), CoderConfig::conv(32, 9, 2),
                     CoderConfig::conv(64, 9, 4), CoderConfig::conv(64, 9, 5)};
  cfg.coder.dense_dim = 64;
  cfg.coder.gru_hidden = 64;
  cfg.voder.cond_channels = 64;
  cfg.voder.cond_dim = 64;
  cfg.voder.embed_dim = 64;
  cfg.voder.gru1_hidden = 64;
  cfg.voder.gru2_hidden = 32;
  return cfg;
}

ModelConfig ModelConfig::gradcheck() {
  ModelConfig cfg;
  cfg.coder.stack = {CoderConfig::conv(3, 9, 2), CoderConfig::conv(4, 9, 2), CoderConfig::conv(4, 9, 2)};
  cfg.coder.dense_dim = 4;
  cfg.coder.gru_hidden = 4;
  cfg.coder.feat_dim = 4;
  cfg.voder.cond_channels = 4;
  cfg.voder.cond_dim = 4;
  cfg.voder.embed_dim = 4;
  cfg.voder.gru1_hidden = 4;
  cfg.voder.gru2_hidden = 4;
  return cfg;
}

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  std::vector<ParamSpec> specs;
  auto weight = [&](std::string name, Shape shape, std::size_t fan_in, std::size_t fan_out) {
    specs.push_back({std::move(name), std::move(shape), InitKind::glorot, fan_in, fan_out});
  };
  auto bias = [&](std::string name, std::size_t n) { specs.push_back({std::move(name), {n}, InitKind::zero, 0, 0}); };
  auto gru = [&](const std::string& prefix, std::size_t n, std::size_t m) {
    weight(prefix + ".W", {3 * m, n}, n, m);
    weight(prefix + ".U", {3 * m, m}, m, m);
    bias(prefix + ".b", 3 * m);
  };

  const auto& c = cfg.coder;
  std::size_t channels = 1;
  for (std::size_t i = 0; i < c.stack.size(); ++i) {
    const auto& l = c.stack[i];
    if (l.kind != LayerKind::conv1d) continue;
    const std::string p = "coder.conv" + std::to_string(i);
    weight(p + ".w", {l.out, channels, l.kernel}, channels * l.kernel, l.out * l.kernel);
    bias(p + ".b", l.out);
    channels = l.out;
  }
  weight("coder.dense.W", {c.dense_dim, channels}, channels, c.dense_dim);
  bias("coder.dense.b", c.dense_dim);
  gru("coder.gru", c.dense_dim, c.gru_hidden);
  weight("coder.out.W", {c.feat_dim, c.gru_hidden}, c.gru_hidden, c.feat_dim);
  bias("coder.out.b", c.feat_dim);

  const auto& v = cfg.voder;
  std::size_t in = c.feat_dim;
  for (int i = 0; i < 2; ++i) {
    const std::string p = "voder.cond_conv" + std::to_string(i);
    weight(p + ".w", {v.cond_channels, in, v.cond_kernel}, in * v.cond_kernel, v.cond_channels * v.cond_kernel);
    bias(p + ".b", v.cond_channels);
    in = v.cond_channels;
  }
  for (int i = 0; i < 2; ++i) {
    const std::string p = "voder.cond_dense" + std::to_string(i);
    weight(p + ".W", {v.cond_dim, in}, in, v.cond_dim);
    bias(p + ".b", v.cond_dim);
    in = v.cond_dim;
  }
  weight("voder.embed", {v.levels, v.embed_dim}, 1, v.embed_dim);
  gru("voder.gru1", v.embed_dim + v.cond_dim, v.gru1_hidden);
  gru("voder.gru2", v.gru1_hidden, v.gru2_hidden);
  weight("voder.dualfc.W1", {v.levels, v.gru2_hidden}, v.gru2_hidden, v.levels);
  weight("voder.dualfc.W2", {v.levels, v.gru2_hidden}, v.gru2_hidden, v.levels);
  specs.push_back({"voder.dualfc.a1", {v.levels}, InitKind::one, 0, 0});
  specs.push_back({"voder.dualfc.a2", {v.levels}, InitKind::one, 0, 0});
  bias("voder.dualfc.b1", v.levels);
  bias("voder.dualfc.b2", v.levels);
  return specs;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("model has no parameter '" + name + "'");
  return it->second;
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("model has no parameter '" + name + "'");
  return it->second;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors) n += t.size();
  return n;
}

ModelParams ModelParams::alias() const {
  ModelParams out{config, {}};
  for (const auto& [name, t] : tensors) out.tensors.emplace(name, t.alias());
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams out{config, {}};
  for (const auto& [name, t] : tensors) out.tensors.emplace(name, t.clone());
  return out;
}

void ModelParams::set_requires_grad(bool flag) {
  for (auto& [_, t] : tensors) t.set_requires_grad(flag);
}

void ModelParams::zero_grad() {
  for (auto& [_, t] : tensors) t.zero_grad();
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelParams params{cfg, {}};
  for (const auto& spec : param_specs(cfg)) {
    Tensor t(spec.shape);
    auto v = t.values();
    switch (spec.init) {
      case InitKind::zero: break;
      case InitKind::one: std::fill(v.begin(), v.end(), Real{1}); break;
      case InitKind::glorot: {
        const Real bound = std::sqrt(Real{6} / static_cast<Real>(spec.fan_in + spec.fan_out));
        std::uniform_real_distribution<Real> dist(-bound, bound);
        for (auto& x : v) x = dist(rng);
        break;
      }
    }
    params.tensors.emplace(spec.name, std::move(t));
  }
  return params;
}

}  // namespace rawnet
