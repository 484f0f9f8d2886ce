#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "rawnet/audio.hpp"
#include "rawnet/byteio.hpp"
#include "rawnet/error.hpp"
#include "rawnet/mulaw.hpp"
#include "rawnet/signal.hpp"

using namespace rawnet;

namespace {

// Hand-built RIFF/WAVE bytes, independent of the library writer.
std::vector<std::uint8_t> wav_bytes(const std::vector<std::int16_t>& pcm, std::uint16_t channels = 1,
                                    std::uint16_t bits = 16, std::uint16_t format = 1) {
  ByteWriter w;
  const std::uint32_t data_len = static_cast<std::uint32_t>(pcm.size() * 2);
  w.tag("RIFF");
  w.u32(36 + data_len);
  w.tag("WAVE");
  w.tag("fmt ");
  w.u32(16);
  w.u16(format);
  w.u16(channels);
  w.u32(16000);
  w.u32(16000 * channels * bits / 8);
  w.u16(static_cast<std::uint16_t>(channels * bits / 8));
  w.u16(bits);
  w.tag("data");
  w.u32(data_len);
  for (auto s : pcm) w.u16(static_cast<std::uint16_t>(s));
  return w.take();
}

WavError::Kind wav_error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    wav_decode(bytes);
  } catch (const WavError& e) {
    return e.kind();
  }
  FAIL("expected WavError");
  return WavError::Kind::malformed;
}

// Reference mu-law curve written out from the definition.
Real F(Real x) { return std::copysign(std::log1p(255 * std::fabs(x)) / std::log(256.0), x); }
Real Finv(Real y) { return std::copysign((std::pow(256.0, std::fabs(y)) - 1) / 255, y); }

}  // namespace

TEST_SUITE("signal") {

TEST_CASE("wav read scaling and errors") {
  auto clip = wav_decode(wav_bytes({0, 16384, -32768}));
  REQUIRE(clip.size() == 3);
  CHECK(clip.samples[0] == 0.0);
  CHECK(clip.samples[1] == 0.5);
  CHECK(clip.samples[2] == -1.0);
  CHECK(clip.sample_rate == 16000);

  CHECK(wav_error_kind(wav_bytes({0, 0}, 2)) == WavError::Kind::unsupported_channels);
  CHECK(wav_error_kind(wav_bytes({0, 0}, 1, 8)) == WavError::Kind::unsupported_bit_depth);
  CHECK(wav_error_kind(wav_bytes({0, 0}, 1, 16, 3)) == WavError::Kind::unsupported_encoding);
  auto truncated = wav_bytes({1, 2, 3});
  truncated.resize(30);
  CHECK(wav_error_kind(truncated) == WavError::Kind::malformed);
  auto bad_magic = wav_bytes({1});
  bad_magic[0] = 'X';
  CHECK(wav_error_kind(bad_magic) == WavError::Kind::malformed);
}

TEST_CASE("wav write values and bit-exact round trip") {
  CHECK(to_pcm16(1.0) == 32767);
  CHECK(to_pcm16(-1.0) == -32768);
  CHECK(to_pcm16(2.0) == 32767);
  CHECK(to_pcm16(-2.0) == -32768);
  CHECK(to_pcm16(0.5) == 16384);

  AudioClip all;
  for (int v = -32768; v <= 32767; ++v) all.samples.push_back(v / 32768.0);
  const auto path = std::filesystem::temp_directory_path() / "rawnet_test_roundtrip.wav";
  wav_write(all, path);
  CHECK(wav_read(path) == all);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(wav_write(all, "/nonexistent-dir/x.wav"), IoError);
}

TEST_CASE("mu-law encode examples") {
  CHECK(mulaw::encode(0.0) == 128);
  CHECK(mulaw::encode(1.0) == 255);
  CHECK(mulaw::encode(-1.0) == 0);
  CHECK(mulaw::encode(3.0) == 255);
  CHECK(mulaw::encode(-3.0) == 0);
  CHECK_THROWS_AS(mulaw::encode(NAN), NumericError);
  CHECK_THROWS_AS(mulaw::decode(256), IndexError);
  CHECK_THROWS_AS(mulaw::decode(-1), IndexError);
}

TEST_CASE("mu-law decode closed-form values") {
  // independent evaluation of F^-1 at the bin centres
  CHECK(mulaw::decode(128) == doctest::Approx(8.587117119261422e-05).epsilon(1e-12));
  CHECK(mulaw::decode(255) == doctest::Approx(0.9784880309586322).epsilon(1e-12));
  CHECK(mulaw::decode(0) == doctest::Approx(-0.9784880309586322).epsilon(1e-12));
  for (int l = 0; l < 256; ++l) CHECK(mulaw::decode(l) == doctest::Approx(Finv((l + 0.5) / 128 - 1)).epsilon(1e-13));
}

TEST_CASE("mu-law exhaustive properties") {
  for (int l = 0; l < 256; ++l) CHECK(mulaw::encode(mulaw::decode(l)) == l);

  int prev = -1;
  for (int i = 0; i < 65536; ++i) {
    const Real x = -1.0 + 2.0 * i / 65535.0;
    const int l = mulaw::encode(x);
    CHECK(l >= prev);
    prev = l;
    // half a companded bin (1/256 in F-space) around F(x), mapped back through F^-1
    const Real y = F(x);
    const Real bound = std::max(std::fabs(Finv(std::min(1.0, y + 1.0 / 256)) - x),
                                std::fabs(Finv(std::max(-1.0, y - 1.0 / 256)) - x));
    CHECK(std::fabs(mulaw::decode(l) - x) <= bound + 1e-15);
    // x lies inside the bin [F^-1(l/128 - 1), F^-1((l+1)/128 - 1)] of its level
    CHECK(x >= Finv(l / 128.0 - 1) - 1e-12);
    CHECK(x <= Finv((l + 1) / 128.0 - 1) + 1e-12);
  }
}

TEST_CASE("noise injection") {
  std::vector<Real> x(1000);
  std::iota(x.begin(), x.end(), 0);
  for (auto& v : x) v = std::sin(v * 0.01) * 0.9;
  Rng rng(1);
  CHECK(inject_noise(x, 0.0, rng) == x);

  Rng a(42), b(42);
  CHECK(inject_noise(x, 0.1, a) == inject_noise(x, 0.1, b));
  Rng c(3);
  for (Real v : inject_noise(x, 5.0, c)) CHECK((v >= -1 && v <= 1));

  std::vector<Real> zeros(1000000, 0.0);
  Rng d(7);
  const auto out = inject_noise(zeros, 0.2, d);
  Real mean = 0, var = 0;
  for (Real v : out) mean += v;
  mean /= static_cast<Real>(out.size());
  for (Real v : out) var += (v - mean) * (v - mean);
  var /= static_cast<Real>(out.size() - 1);
  CHECK(std::fabs(var - 0.04) <= 0.02 * 0.04);
}

TEST_CASE("frame energy") {
  std::vector<Real> s(400, 0.0);
  for (std::size_t i = 160; i < 320; ++i) s[i] = 0.5;
  auto e = frame_energy(s, 160);
  REQUIRE(e.size() == 3);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.25);
  CHECK(e[2] == 0.0);
  CHECK(frame_energy(std::vector<Real>{}, 160).empty());

  Rng rng(5);
  std::uniform_real_distribution<Real> u(-1, 1);
  std::vector<Real> r(1234);
  for (auto& v : r) v = u(rng);
  auto er = frame_energy(r, 100);
  REQUIRE(er.size() == 13);
  for (std::size_t f = 0; f < er.size(); ++f) {
    const std::size_t lo = f * 100, hi = std::min<std::size_t>(r.size(), lo + 100);
    Real acc = 0;
    for (std::size_t i = lo; i < hi; ++i) acc += r[i] * r[i];
    CHECK(er[f] == acc / static_cast<Real>(hi - lo));
  }
}

TEST_CASE("vad denoise") {
  const VadConfig cfg;
  AudioClip silence;
  silence.samples.assign(1600, 0.0);
  CHECK(vad_denoise(silence, cfg) == silence);

  AudioClip speech;
  for (int i = 0; i < 1600; ++i) speech.samples.push_back(0.4 * std::sin(0.05 * i) + (i % 320 < 160 ? 0.1 : 0.0));
  CHECK(vad_denoise(speech, cfg) == speech);

  // 10 noise frames, 10 tone frames, 20 noise frames
  AudioClip mixed;
  Rng rng(11);
  std::uniform_real_distribution<Real> u(-0.001, 0.001);
  for (int f = 0; f < 40; ++f)
    for (int i = 0; i < 160; ++i) {
      const int t = f * 160 + i;
      mixed.samples.push_back(f >= 10 && f < 20 ? 0.5 * std::sin(2 * M_PI * 200 * t / 16000.0) : u(rng));
    }
  const auto out = vad_denoise(mixed, cfg);
  const auto mask = vad_mask(mixed.samples, cfg);
  for (int f = 0; f < 40; ++f) {
    const bool tone = f >= 10 && f < 20;
    const bool hang = f >= 20 && f < 22;
    CHECK(mask[f] == (tone || hang));
    for (int i = 0; i < 160; ++i) {
      const std::size_t t = static_cast<std::size_t>(f * 160 + i);
      if (mask[f]) CHECK(out.samples[t] == mixed.samples[t]);
      else CHECK(out.samples[t] == 0.0);
    }
  }
  CHECK(vad_denoise(out, cfg) == out);

  // buzz before onset: 20 buzz frames, then 20 tone frames
  AudioClip buzz;
  for (int t = 0; t < 40 * 160; ++t)
    buzz.samples.push_back(t < 20 * 160 ? 0.001 * std::sin(2 * M_PI * 50 * t / 16000.0) + u(rng)
                                        : 0.5 * std::sin(2 * M_PI * 200 * t / 16000.0));
  const auto clean = vad_denoise(buzz, cfg);
  Real before = 0, after = 0;
  for (std::size_t t = 0; t < 20 * 160; ++t) {
    before += buzz.samples[t] * buzz.samples[t];
    after += clean.samples[t] * clean.samples[t];
  }
  CHECK(10 * std::log10(before / (after + 1e-300)) >= 20.0);
  for (std::size_t t = 20 * 160; t < buzz.samples.size(); ++t) CHECK(clean.samples[t] == buzz.samples[t]);
}

TEST_CASE("vad idempotence on random clips") {
  Rng rng(12);
  std::uniform_real_distribution<Real> u(-1, 1);
  std::uniform_real_distribution<Real> gain(-6, 0);
  for (int k = 0; k < 20; ++k) {
    AudioClip c;
    for (int f = 0; f < 30; ++f) {
      const Real g = std::pow(10.0, gain(rng));
      for (int i = 0; i < 160; ++i) c.samples.push_back(g * u(rng));
    }
    const auto once = vad_denoise(c, {});
    CHECK(vad_denoise(once, {}) == once);
  }
}

TEST_CASE("pitch on sines, periodic signals, noise and silence") {
  AudioClip sine;
  for (int i = 0; i < 3200; ++i) sine.samples.push_back(0.5 * std::sin(2 * M_PI * 100 * i / 16000.0));
  for (const auto& f : estimate_pitch(sine, 160)) {
    CHECK(f.voiced);
    CHECK(f.correlation >= 0.95);
    CHECK(std::abs(f.period - 160) <= 1);
  }

  for (int tau = 40; tau <= 320; ++tau) {
    AudioClip c;
    for (int i = 0; i < 3200; ++i) {
      const Real ph = 2 * M_PI * i / tau;
      c.samples.push_back(0.4 * std::sin(ph) + 0.2 * std::sin(2 * ph + 0.3) + 0.1 * std::sin(3 * ph + 1.1));
    }
    for (const auto& f : estimate_pitch(c, 160)) {
      CHECK(f.voiced);
      CHECK_MESSAGE(std::abs(f.period - tau) <= 1, "tau " << tau << " got " << f.period);
    }
  }

  AudioClip noise;
  Rng rng(13);
  std::normal_distribution<Real> g(0, 0.3);
  for (int i = 0; i < 16000; ++i) noise.samples.push_back(std::clamp(g(rng), -1.0, 1.0));
  const auto np = estimate_pitch(noise, 160);
  std::size_t low = 0;
  for (const auto& f : np) {
    low += f.correlation < 0.3;
    CHECK(f.voiced == (f.correlation >= 0.3));
  }
  CHECK(static_cast<Real>(low) >= 0.9 * static_cast<Real>(np.size()));

  AudioClip zero;
  zero.samples.assign(3200, 0.0);
  for (const auto& f : estimate_pitch(zero, 160)) {
    CHECK(f.correlation == 0.0);
    CHECK_FALSE(f.voiced);
  }

  AudioClip shortclip;
  shortclip.samples.assign(500, 0.3);
  for (const auto& f : estimate_pitch(shortclip, 160)) CHECK_FALSE(f.voiced);
}

}  // TEST_SUITE
