#include <cmath>
#include <random>

#include "doctest.h"
#include "rawnet/coder.hpp"
#include "rawnet/error.hpp"
#include "rawnet/gradcheck.hpp"
#include "rawnet/model.hpp"
#include "rawnet/signal.hpp"

using namespace rawnet;

namespace {

std::vector<Real> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<Real> u(-0.8, 0.8);
  std::vector<Real> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("coder") {

TEST_CASE("frame count arithmetic") {
  const CoderConfig cfg;
  CHECK(cfg.frame_size() == 160);
  CHECK(coder_num_frames(3200, cfg) == 20);
  CHECK(coder_num_frames(160, cfg) == 1);
  CHECK(coder_num_frames(3201, cfg) == 21);
  CHECK_THROWS_AS(coder_num_frames(159, cfg), InputTooShortError);
  // receptive-field slack of the default stack
  CHECK(cfg.required_input(20) == 3417);
  CHECK(cfg.slack() == 217);
  CHECK(coder_padded_input(noise(3200, 1), cfg).size() == 3417);
  CHECK(coder_padded_input(noise(3201, 1), cfg).size() == cfg.required_input(21));
}

TEST_CASE("default coder shapes") {
  const ModelConfig cfg;
  const ModelParams params = init_params(cfg, 1);
  AudioClip clip;
  clip.samples = noise(3200, 2);
  const auto f = coder_forward(clip, params);
  CHECK(f.n_frames == 20);
  CHECK(f.feat_dim == 64);
  CHECK(f.frame_size == 160);
  CHECK(f.values.size() == 20 * 64);
  for (Real v : f.values) CHECK(std::isfinite(v));

  clip.samples = noise(6400, 3);
  const auto g = coder_forward(clip, params);
  CHECK(g.n_frames == 40);
  CHECK(g.feat_dim == 64);

  clip.samples.resize(100);
  CHECK_THROWS_AS(coder_forward(clip, params), InputTooShortError);
}

TEST_CASE("n * K samples give exactly n frames for n in 1..64") {
  const ModelConfig cfg = ModelConfig::tiny();
  const ModelParams params = init_params(cfg, 4);
  const std::size_t K = cfg.frame_size();
  const auto all = noise(64 * K, 5);
  for (std::size_t n = 1; n <= 64; ++n) {
    Tensor f = coder_forward(std::span(all).subspan(0, n * K), params);
    CHECK(f.dim(0) == n);
    CHECK(f.dim(1) == cfg.coder.feat_dim);
  }
}

TEST_CASE("all-zero clip with zero biases gives all-zero features") {
  const ModelParams params = init_params(ModelConfig{}, 6);
  AudioClip clip;
  clip.samples.assign(3200, 0.0);
  for (Real v : coder_forward(clip, params).values) CHECK(v == 0.0);
}

TEST_CASE("determinism") {
  const ModelParams params = init_params(ModelConfig::tiny(), 7);
  AudioClip clip;
  clip.samples = noise(3200, 8);
  CHECK(coder_forward(clip, params) == coder_forward(clip, params));
}

TEST_CASE("truncating the input to the first m frames reproduces those frames") {
  const ModelConfig cfg = ModelConfig::tiny();
  const ModelParams params = init_params(cfg, 9);
  const std::size_t K = cfg.frame_size();
  const auto full_in = noise(20 * K, 10);
  const Tensor full = coder_forward(full_in, params);
  const std::size_t d = cfg.coder.feat_dim;
  for (std::size_t m = 2; m < 20; ++m) {
    const Tensor part = coder_forward(std::span(full_in).subspan(0, m * K), params);
    auto pv = part.values();
    auto fv = full.values();
    bool same = true;
    for (std::size_t i = 0; i < m * d; ++i) same = same && pv[i] == fv[i];
    CHECK_MESSAGE(same, "m = " << m);
  }
}

TEST_CASE("maxpool entries in the stack") {
  ModelConfig cfg = ModelConfig::gradcheck();
  cfg.coder.stack = {CoderConfig::conv(3, 5, 2), CoderConfig::pool(2), CoderConfig::conv(4, 3, 2)};
  CHECK(cfg.frame_size() == 8);
  const ModelParams params = init_params(cfg, 11);
  const auto in = noise(5 * 8, 12);
  Tensor f = coder_forward(in, params);
  CHECK(f.dim(0) == 5);
}

TEST_CASE("full coder stack on 1 x 320 passes the gradient check") {
  const ModelConfig cfg = ModelConfig::gradcheck();
  ModelParams params = init_params(cfg, 13);
  const auto clip = noise(320, 14);
  const std::size_t frames = 320 / cfg.frame_size();
  const auto r = noise(frames * cfg.coder.feat_dim, 15);
  std::vector<std::pair<std::string, Tensor>> named;
  for (auto& [name, t] : params.tensors)
    if (name.rfind("coder.", 0) == 0) named.emplace_back(name, t);
  auto rep = grad_check("coder", [&](Tape* t) { return ops::dot(coder_forward(clip, params, t), r, t); }, named);
  CHECK_MESSAGE(rep.max_rel_error <= 1e-4, rep.worst);
}

}  // TEST_SUITE
