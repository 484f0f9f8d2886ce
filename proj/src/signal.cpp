#include "rawnet/signal.hpp"

#include <algorithm>
#include <cmath>

#include "rawnet/error.hpp"

namespace rawnet {

std::vector<Real> inject_noise(std::span<const Real> x, Real sigma, Rng& rng) {
  if (!(sigma >= 0)) throw ConfigError("inject_noise: sigma must be >= 0");
  std::vector<Real> out(x.begin(), x.end());
  if (sigma == 0) return out;
  std::normal_distribution<Real> gauss(0, sigma);
  for (auto& v : out) v = std::clamp(v + gauss(rng), Real{-1}, Real{1});
  return out;
}

std::vector<Real> frame_energy(std::span<const Real> samples, std::size_t frame_size) {
  if (frame_size == 0) throw ConfigError("frame_energy: frame_size must be > 0");
  std::vector<Real> energy;
  energy.reserve((samples.size() + frame_size - 1) / frame_size);
  for (std::size_t start = 0; start < samples.size(); start += frame_size) {
    const std::size_t end = std::min(samples.size(), start + frame_size);
    Real acc = 0;
    for (std::size_t i = start; i < end; ++i) acc += samples[i] * samples[i];
    energy.push_back(acc / static_cast<Real>(end - start));
  }
  return energy;
}

std::vector<bool> vad_mask(std::span<const Real> samples, const VadConfig& cfg) {
  const auto energy = frame_energy(samples, cfg.frame_size);
  std::vector<bool> active(energy.size(), false);
  if (energy.empty()) return active;
  const Real peak = *std::max_element(energy.begin(), energy.end());
  if (peak <= 0) return active;
  std::size_t since_active = cfg.hangover_frames + 1;
  for (std::size_t f = 0; f < energy.size(); ++f) {
    const Real db = 10 * std::log10(energy[f] / peak + 1e-12);
    if (db >= cfg.threshold_db) {
      active[f] = true;
      since_active = 0;
    } else {
      ++since_active;
      active[f] = since_active <= cfg.hangover_frames;
    }
  }
  return active;
}

AudioClip vad_denoise(const AudioClip& clip, const VadConfig& cfg) {
  const auto active = vad_mask(clip.samples, cfg);
  AudioClip out = clip;
  for (std::size_t f = 0; f < active.size(); ++f) {
    if (active[f]) continue;
    const std::size_t start = f * cfg.frame_size;
    const std::size_t end = std::min(out.samples.size(), start + cfg.frame_size);
    std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(start),
              out.samples.begin() + static_cast<std::ptrdiff_t>(end), Real{0});
  }
  return out;
}

PitchInfo estimate_pitch(const AudioClip& clip, std::size_t frame_size, const PitchConfig& cfg) {
  if (frame_size == 0) throw ConfigError("estimate_pitch: frame_size must be > 0");
  const std::size_t n = clip.samples.size();
  const std::size_t n_frames = (n + frame_size - 1) / frame_size;
  PitchInfo info(n_frames);
  const std::size_t half = cfg.max_lag;
  const std::size_t window = 2 * half;
  if (n < window) return info;

  const auto& x = clip.samples;
  std::vector<Real> r(cfg.max_lag + 2, 0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t centre = f * frame_size + frame_size / 2;
    const std::size_t start = std::min(centre > half ? centre - half : 0, n - window);
    // Correlate the first half of the window against lagged copies.
    Real e0 = 0;
    for (std::size_t i = 0; i < half; ++i) e0 += x[start + i] * x[start + i];
    Real best = 0;
    for (std::size_t lag = cfg.min_lag; lag <= cfg.max_lag; ++lag) {
      Real xy = 0, e1 = 0;
      for (std::size_t i = 0; i < half; ++i) {
        const Real a = x[start + i], b = x[start + i + lag];
        xy += a * b;
        e1 += b * b;
      }
      const Real denom = std::sqrt(e0 * e1);
      r[lag] = denom > 0 ? std::clamp(xy / denom, Real{0}, Real{1}) : Real{0};
      best = std::max(best, r[lag]);
    }
    PitchFrame& pf = info[f];
    pf.correlation = best;
    pf.voiced = best >= cfg.voicing_threshold && best > 0;
    if (!pf.voiced) continue;
    for (std::size_t lag = cfg.min_lag; lag <= cfg.max_lag; ++lag) {
      const bool left_ok = lag == cfg.min_lag || r[lag] >= r[lag - 1];
      const bool right_ok = lag == cfg.max_lag || r[lag] >= r[lag + 1];
      if (left_ok && right_ok && r[lag] >= cfg.octave_ratio * best) {
        pf.period = static_cast<int>(lag);
        break;
      }
    }
  }
  return info;
}

}  // namespace rawnet
