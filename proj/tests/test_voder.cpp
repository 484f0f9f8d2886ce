#include <cmath>
#include <random>

#include "doctest.h"
#include "rawnet/coder.hpp"
#include "rawnet/error.hpp"
#include "rawnet/gradcheck.hpp"
#include "rawnet/mulaw.hpp"
#include "rawnet/voder.hpp"

using namespace rawnet;

namespace {

FeatureMatrix random_features(std::size_t frames, std::size_t dim, std::size_t K, std::uint64_t seed) {
  FeatureMatrix f;
  f.n_frames = frames;
  f.feat_dim = dim;
  f.frame_size = K;
  Rng rng(seed);
  std::normal_distribution<Real> g(0, 1);
  f.values.resize(frames * dim);
  for (auto& v : f.values) v = g(rng);
  return f;
}

ModelParams zeroed(ModelParams p) {
  for (auto& [_, t] : p.tensors)
    for (auto& v : t.values()) v = 0;
  return p;
}

Real entropy(const std::vector<Real>& p) {
  Real h = 0;
  for (Real v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

}  // namespace

TEST_SUITE("voder") {

TEST_CASE("conditioning shapes and zero case") {
  const ModelConfig cfg;
  const ModelParams params = init_params(cfg, 1);
  CHECK(condition_features(random_features(20, 64, 160, 2).as_tensor(), params).shape() == Shape{20, 128});
  CHECK(condition_features(random_features(1, 64, 160, 3).as_tensor(), params).shape() == Shape{1, 128});
  FeatureMatrix zero = random_features(5, 64, 160, 4);
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  for (Real v : condition_features(zero.as_tensor(), params).values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(condition_features(random_features(5, 63, 160, 5).as_tensor(), params), ShapeError);
}

TEST_CASE("upsample by repetition") {
  CHECK(upsample_repeat(std::vector<Real>{1, 2}, 1, 2, 3) == std::vector<Real>{1, 2, 1, 2, 1, 2});
  const std::vector<Real> c{1, 2, 3, 4, 5, 6};
  CHECK(upsample_repeat(c, 3, 2, 1) == c);
  const auto big = upsample_repeat(std::vector<Real>(20 * 128, 0.5), 20, 128, 160);
  CHECK(big.size() == 3200 * 128);
}

TEST_CASE("voder step on zero parameters and determinism") {
  const ModelConfig cfg = ModelConfig::tiny();
  const ModelParams zp = zeroed(init_params(cfg, 1));
  const auto s0 = VoderState::initial(cfg.voder);
  CHECK(s0.prev_level == 128);
  const std::vector<Real> cond(cfg.voder.cond_dim, 0.3);
  auto r = voder_step(s0, cond, zp);
  CHECK(r.logits.size() == 256);
  for (Real v : r.logits.values()) CHECK(v == 0.0);
  for (Real p : softmax(r.logits.values())) CHECK(p == doctest::Approx(1.0 / 256));

  const ModelParams params = init_params(cfg, 2);
  auto a = voder_step(s0, cond, params);
  auto b = voder_step(s0, cond, params);
  CHECK(std::equal(a.logits.values().begin(), a.logits.values().end(), b.logits.values().begin()));
  CHECK(a.state.h1 == b.state.h1);
  CHECK(a.state.position == 1);
}

TEST_CASE("single voder step matches finite differences") {
  ModelConfig cfg = ModelConfig::gradcheck();
  ModelParams params = init_params(cfg, 3);
  Rng rng(4);
  std::uniform_real_distribution<Real> u(-1, 1);
  for (auto& [_, t] : params.tensors)
    for (auto& v : t.values()) v = u(rng);
  const VoderWeights w(params);
  Tensor cond({cfg.voder.cond_dim});
  for (auto& v : cond.values()) v = u(rng);
  Tensor h1({cfg.voder.gru1_hidden}), h2({cfg.voder.gru2_hidden});
  for (auto& v : h1.values()) v = u(rng);
  for (auto& v : h2.values()) v = u(rng);
  std::vector<std::pair<std::string, Tensor>> named;
  for (auto& [name, t] : params.tensors)
    if (name.rfind("voder.embed", 0) == 0 || name.rfind("voder.gru", 0) == 0 || name.rfind("voder.dualfc", 0) == 0)
      named.emplace_back(name, t);
  named.emplace_back("cond", cond);
  named.emplace_back("h1", h1);
  auto rep = grad_check(
      "voder_step",
      [&](Tape* t) {
        Tensor x = ops::concat(ops::embedding(77, w.embed, t), cond, t);
        Tensor a = ops::gru_step(x, h1, w.gru1, t);
        Tensor b = ops::gru_step(a, h2, w.gru2, t);
        return ops::softmax_cross_entropy(ops::dualfc(b, w.dualfc, t), 200, t).loss;
      },
      named);
  CHECK_MESSAGE(rep.max_rel_error <= 1e-4, rep.worst);
}

TEST_CASE("argmax and logit scaling") {
  Rng rng(5);
  std::vector<Real> l(256, -1.0);
  l[42] = 3.0;
  CHECK(sample_level(l, {}, nullptr, rng) == 42);
  l[7] = 3.0;
  CHECK(sample_level(l, {}, nullptr, rng) == 7);

  std::normal_distribution<Real> g(0, 2);
  for (int k = 0; k < 1000; ++k) {
    std::vector<Real> logits(256);
    for (auto& v : logits) v = g(rng);
    const auto winner = std::max_element(logits.begin(), logits.end()) - logits.begin();
    const Real h1 = entropy(softmax(logits));
    for (Real c : {0.5, 2.0, 10.0}) {
      std::vector<Real> scaled(logits);
      for (auto& v : scaled) v *= c;
      const auto p = softmax(scaled);
      CHECK(std::max_element(p.begin(), p.end()) - p.begin() == winner);
      if (c > 1) CHECK(entropy(p) <= h1);
    }
  }
}

TEST_CASE("seeded multinomial frequencies follow softmax") {
  // 17 live levels; the rest carry ~1e-13 probability each
  std::vector<Real> logits(256, -30.0);
  for (int i = 0; i < 16; ++i) logits[static_cast<std::size_t>(i * 16)] = 0.1 * i;
  logits[128] = 1.5;
  const auto p = softmax(logits);
  SamplerConfig s;
  s.strategy = SamplerKind::multinomial;
  Rng rng(6);
  const int N = 100000;
  std::vector<int> counts(256);
  for (int i = 0; i < N; ++i) ++counts[static_cast<std::size_t>(sample_level(logits, s, nullptr, rng))];
  for (std::size_t i = 0; i < 256; ++i) {
    const Real sigma = std::sqrt(N * p[i] * (1 - p[i]));
    CHECK_MESSAGE(std::fabs(counts[i] - N * p[i]) <= 3 * sigma + 1e-9, "level " << i);
  }
}

TEST_CASE("pitch-dependent samplers") {
  std::vector<Real> logits(256, 0.0);
  logits[10] = 2;
  Rng rng(7);
  SamplerConfig cond;
  cond.strategy = SamplerKind::conditional;
  CHECK_THROWS_AS(sample_level(logits, cond, nullptr, rng), ConfigError);
  SamplerConfig pc;
  pc.strategy = SamplerKind::pitch_correlation;
  CHECK_THROWS_AS(sample_level(logits, pc, nullptr, rng), ConfigError);

  // voiced frames with a large c collapse onto the argmax
  cond.c = 1000;
  PitchFrame voiced{100, 0.9, true};
  for (int i = 0; i < 100; ++i) CHECK(sample_level(logits, cond, &voiced, rng) == 10);
  pc.pc_gain = 1000;
  for (int i = 0; i < 100; ++i) CHECK(sample_level(logits, pc, &voiced, rng) == 10);

  SamplerConfig bad;
  bad.c = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_sampler("greedy"), ConfigError);
}

TEST_CASE("synthesis length, range, determinism, state isolation") {
  const ModelConfig cfg = ModelConfig::gradcheck();
  const ModelParams params = init_params(cfg, 8);
  const auto A = random_features(6, cfg.coder.feat_dim, cfg.frame_size(), 9);
  const auto B = random_features(4, cfg.coder.feat_dim, cfg.frame_size(), 10);
  const SamplerConfig argmax;
  const auto a1 = synthesize(A, params, argmax);
  CHECK(a1.size() == 6 * cfg.frame_size());
  for (Real v : a1.samples) CHECK((v >= -1 && v <= 1));
  CHECK(synthesize(A, params, argmax) == a1);

  SamplerConfig multi;
  multi.strategy = SamplerKind::multinomial;
  multi.seed = 11;
  const auto m1 = synthesize(A, params, multi);
  CHECK(synthesize(A, params, multi) == m1);

  const auto b_fresh = synthesize(B, params, multi);
  synthesize(A, params, multi);
  CHECK(synthesize(B, params, multi) == b_fresh);

  const ModelParams tiny = init_params(ModelConfig::tiny(), 12);
  const auto F = random_features(20, 64, 160, 13);
  CHECK(synthesize(F, tiny, argmax).size() == 3200);
}

TEST_CASE("fast synthesis agrees with the step-by-step reference") {
  const ModelConfig cfg = ModelConfig::tiny();
  const ModelParams params = init_params(cfg, 14);
  const auto F = random_features(3, 64, 160, 15);
  SamplerConfig multi;
  multi.strategy = SamplerKind::multinomial;
  multi.seed = 3;
  for (const SamplerConfig& s : {SamplerConfig{}, multi}) {
    const auto fast = synthesize(F, params, s);
    const auto ref = synthesize_reference(F, params, s);
    REQUIRE(fast.size() == ref.size());
    std::size_t same = 0;
    for (std::size_t i = 0; i < fast.size(); ++i) same += fast.samples[i] == ref.samples[i];
    CHECK(same == fast.size());
  }
}

TEST_CASE("copy synthesis lengths") {
  const ModelParams params = init_params(ModelConfig::tiny(), 16);
  AudioClip clip;
  Rng rng(17);
  std::uniform_real_distribution<Real> u(-0.5, 0.5);
  for (int i = 0; i < 3300; ++i) clip.samples.push_back(u(rng));
  CHECK(copy_synthesis(clip, params, {}).size() == 3360);
  clip.samples.resize(3200);
  CHECK(copy_synthesis(clip, params, {}).size() == 3200);
  clip.samples.resize(100);
  CHECK_THROWS_AS(copy_synthesis(clip, params, {}), InputTooShortError);
}

}  // TEST_SUITE
