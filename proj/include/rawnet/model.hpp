#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rawnet/ops.hpp"
#include "rawnet/tensor.hpp"

namespace rawnet {

enum class LayerKind { conv1d, maxpool, dense, gru, embedding, dualfc };

/// One layer of a network description. Only the fields relevant to `kind`
/// are meaningful.
struct LayerSpec {
  LayerKind kind = LayerKind::conv1d;
  std::size_t in = 1;        // input channels / features
  std::size_t out = 1;       // output channels / features
  std::size_t kernel = 1;    // conv kernel size or pooling width
  std::size_t stride = 1;
  std::size_t hidden = 1;    // gru
  std::size_t vocab = 1;     // embedding
  std::size_t embed_dim = 1; // embedding
  Activation activation = Activation::none;

  /// Throws ConfigError when a size is zero.
  void validate() const;
  bool operator==(const LayerSpec&) const = default;
};

/// Strided conv stack followed by a per-frame dense layer, a frame-rate GRU
/// and a linear projection to the feature dimension.
struct CoderConfig {
  /// conv1d (ReLU by default) and maxpool entries; `in` is derived.
  std::vector<LayerSpec> stack = default_stack();
  std::size_t dense_dim = 128;
  std::size_t gru_hidden = 128;
  std::size_t feat_dim = 64;

  static std::vector<LayerSpec> default_stack();
  static LayerSpec conv(std::size_t out, std::size_t kernel, std::size_t stride,
                        Activation act = Activation::relu);
  static LayerSpec pool(std::size_t width);

  /// Samples per feature frame: product of all strides and pool widths.
  std::size_t frame_size() const;
  /// Input length the stack needs to emit exactly n_frames outputs.
  std::size_t required_input(std::size_t n_frames) const;
  /// Extra samples beyond n_frames * frame_size (independent of n_frames).
  std::size_t slack() const { return required_input(1) - frame_size(); }
  void validate() const;
  bool operator==(const CoderConfig&) const = default;
};

struct VoderConfig {
  std::size_t cond_channels = 128;  // two conv layers over frames
  std::size_t cond_kernel = 3;
  std::size_t cond_dim = 128;       // two dense layers
  std::size_t embed_dim = 128;
  std::size_t gru1_hidden = 256;
  std::size_t gru2_hidden = 64;
  std::size_t levels = 256;         // DualFC output, one per mu-law level
  void validate() const;
  bool operator==(const VoderConfig&) const = default;
};

struct ModelConfig {
  CoderConfig coder;
  VoderConfig voder;
  std::uint32_t sample_rate = 16000;

  std::size_t frame_size() const { return coder.frame_size(); }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  /// Desk-scale variant used by the overfit harness: halved channels, small GRUs.
  static ModelConfig tiny();
  /// Very small variant for finite-difference checks (strides 2,2,2 -> K = 8).
  static ModelConfig gradcheck();
};

enum class InitKind { glorot, zero, one };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init = InitKind::glorot;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

/// Every trainable tensor of the model, in a fixed order.
std::vector<ParamSpec> param_specs(const ModelConfig& cfg);

/// Named weight bundle plus the architecture that produced it.
struct ModelParams {
  ModelConfig config;
  std::map<std::string, Tensor> tensors;

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  std::size_t count() const;  // scalar parameters

  /// New bundle whose tensors share values with this one but own their
  /// gradients; one per data-parallel worker.
  ModelParams alias() const;
  ModelParams clone() const;
  void set_requires_grad(bool flag);
  void zero_grad();
};

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases,
/// unit DualFC gains. Embedding tables use fan_in = 1, fan_out = embed_dim.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace rawnet
