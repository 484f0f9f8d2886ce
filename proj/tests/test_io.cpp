#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rawnet/byteio.hpp"
#include "rawnet/config.hpp"
#include "rawnet/error.hpp"
#include "rawnet/features.hpp"

using namespace rawnet;

namespace {

FeatureMatrix sample_features(std::size_t frames, std::size_t dim, std::uint64_t seed) {
  FeatureMatrix f;
  f.n_frames = frames;
  f.feat_dim = dim;
  f.frame_size = 160;
  Rng rng(seed);
  std::normal_distribution<float> g(0, 3);
  for (std::size_t i = 0; i < frames * dim; ++i) f.values.push_back(g(rng));
  return f;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("config defaults") {
  const RunConfig d;
  CHECK(d.model.sample_rate == 16000);
  CHECK(d.model.frame_size() == 160);
  CHECK(d.model.coder.feat_dim == 64);
  CHECK(d.model.voder.gru1_hidden == 256);
  CHECK(d.model.voder.gru2_hidden == 64);
  CHECK(d.model.voder.levels == 256);
  CHECK(d.train.clip_samples == 3200);
  CHECK(d.train.noise.voder_sigma == 0.2);
  CHECK(d.train.noise.coder_sigma == 0.1);
  CHECK(d.optimizer.lr == 1e-2);
  CHECK(d.optimizer.beta1 == 0.9);
  CHECK(d.optimizer.beta2 == 0.999);
  CHECK(d.optimizer.eps == 1e-8);
  CHECK(d.sampler.strategy == SamplerKind::argmax);
  CHECK(d.sampler.c == 2.0);
  CHECK(d.vad.threshold_db == -40.0);
  CHECK(d.vad.hangover_frames == 2);
  CHECK(d.vad.frame_size == 160);
}

TEST_CASE("config text round trip and rejection") {
  RunConfig c = parse_config("# comment\n\ncoder.feat_dim = 32\noptim.lr=0.003\nsampler.strategy=multinomial\n");
  CHECK(c.model.coder.feat_dim == 32);
  CHECK(c.optimizer.lr == 0.003);
  CHECK(c.sampler.strategy == SamplerKind::multinomial);
  const RunConfig back = parse_config(config_text(c));
  CHECK(config_text(back) == config_text(c));
  CHECK(back.model == c.model);

  CHECK_THROWS_AS(parse_config("coder.feat_dimm=3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("optim.lr=fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("coder.stack=16:9\n"), ConfigError);
  const RunConfig s = parse_config("coder.stack=8:3:2,pool:2,4:3:5\n");
  CHECK(s.model.frame_size() == 20);
}

TEST_CASE("feature file round trip") {
  const auto f = sample_features(7, 5, 1);
  const auto bytes = encode_features(f);
  CHECK(bytes.size() == 24 + 7 * 5 * 4);
  CHECK(decode_features(bytes) == f);

  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(decode_features(bad), FeatureFileError);
  auto v = bytes;
  v[4] = 9;
  CHECK_THROWS_AS(decode_features(v), FeatureFileError);
  auto cut = bytes;
  cut.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_features(cut), Error);
}

TEST_CASE("CSV dump parses back to the stored float32 values") {
  const auto f = sample_features(4, 6, 2);
  const std::string csv = features_csv(f);
  std::istringstream in(csv);
  std::size_t row = 0;
  for (std::string line; std::getline(in, line); ++row) {
    std::istringstream cells(line);
    std::size_t col = 0;
    for (std::string cell; std::getline(cells, cell, ','); ++col)
      CHECK(static_cast<float>(std::strtod(cell.c_str(), nullptr)) == static_cast<float>(f.values[row * 6 + col]));
    CHECK(col == 6);
  }
  CHECK(row == 4);
}

TEST_CASE("PGM dump") {
  auto f = sample_features(5, 3, 3);
  f.values[0] = -100;
  f.values[1] = 100;
  const auto pgm = features_pgm(f);
  const std::string header = "P5\n5 3\n255\n";
  REQUIRE(pgm.size() == header.size() + 15);
  CHECK(std::string(pgm.begin(), pgm.begin() + static_cast<long>(header.size())) == header);
  // pixel (x = frame, y = dim)
  CHECK(pgm[header.size() + 0] == 0);    // frame 0, dim 0
  CHECK(pgm[header.size() + 5] == 255);  // frame 0, dim 1

  for (auto& v : f.values) v = 0.25;
  const auto flat = features_pgm(f);
  for (std::size_t i = header.size(); i < flat.size(); ++i) CHECK(flat[i] == 128);
}

}  // TEST_SUITE
