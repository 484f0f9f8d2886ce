#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rawnet/error.hpp"
#include "rawnet/tensor.hpp"

namespace rawnet {

/// Mono PCM audio normalized to [-1, 1].
struct AudioClip {
  std::vector<Real> samples;
  std::uint32_t sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  bool operator==(const AudioClip&) const = default;
};

class WavError : public Error {
 public:
  enum class Kind { malformed, unsupported_encoding, unsupported_channels, unsupported_bit_depth };
  WavError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads a RIFF/WAVE file holding 16-bit little-endian mono PCM.
/// Samples are scaled by 1/32768 into [-1, 1).
AudioClip wav_read(const std::filesystem::path& path);
AudioClip wav_decode(const std::vector<std::uint8_t>& bytes);

/// Writes 16-bit PCM. Samples are clamped to [-1, 1], scaled by 32768,
/// rounded to nearest and saturated to the int16 range, so 1.0 -> 32767,
/// -1.0 -> -32768 and every k / 32768 survives a read-back unchanged.
void wav_write(const AudioClip& clip, const std::filesystem::path& path);
std::vector<std::uint8_t> wav_encode(const AudioClip& clip);

std::int16_t to_pcm16(Real sample);

}  // namespace rawnet
