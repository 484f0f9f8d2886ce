#include "rawnet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rawnet/byteio.hpp"

namespace rawnet {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

WavError malformed(const std::string& what) { return WavError(WavError::Kind::malformed, "wav: " + what); }

}  // namespace

AudioClip wav_decode(const std::vector<std::uint8_t>& bytes) try {
  ByteReader in(bytes);
  if (bytes.size() < 12 || in.tag() != "RIFF") throw malformed("missing RIFF header");
  in.u32();  // riff size; trusted only as far as the chunk walk agrees
  if (in.tag() != "WAVE") throw malformed("RIFF form type is not WAVE");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (in.remaining() >= 8) {
    const std::string id = in.tag();
    const std::uint32_t len = in.u32();
    if (len > in.remaining()) throw malformed("chunk '" + id + "' overruns the file");
    if (id == "fmt ") {
      if (len < 16) throw malformed("fmt chunk too short");
      ByteReader fmt(in.bytes(len));
      std::uint16_t tag = fmt.u16();
      channels = fmt.u16();
      rate = fmt.u32();
      fmt.u32();  // byte rate
      fmt.u16();  // block align
      bits = fmt.u16();
      if (tag == kFormatExtensible && len >= 40) {
        fmt.u16();  // cb size
        fmt.u16();  // valid bits
        fmt.u32();  // channel mask
        tag = fmt.u16();
      }
      if (tag != kFormatPcm)
        throw WavError(WavError::Kind::unsupported_encoding,
                       "wav: unsupported encoding tag " + std::to_string(tag) + " (only PCM)");
      if (channels != 1)
        throw WavError(WavError::Kind::unsupported_channels,
                       "wav: unsupported channel count " + std::to_string(channels) + " (only mono)");
      if (bits != 16)
        throw WavError(WavError::Kind::unsupported_bit_depth,
                       "wav: unsupported bit depth " + std::to_string(bits) + " (only 16-bit)");
      if (rate == 0) throw malformed("sample rate is zero");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw malformed("data chunk precedes fmt chunk");
      if (len % 2 != 0) throw malformed("data chunk length is not a whole number of samples");
      ByteReader data(in.bytes(len));
      AudioClip clip;
      clip.sample_rate = rate;
      clip.samples.resize(len / 2);
      for (auto& s : clip.samples) s = static_cast<Real>(data.i16()) / Real{32768};
      return clip;
    } else {
      in.skip(len);
    }
    if (len % 2 == 1 && in.remaining() > 0) in.skip(1);  // chunks are word aligned
  }
  throw malformed(have_fmt ? "no data chunk" : "no fmt chunk");
} catch (const TruncatedError& e) {
  throw malformed(std::string("truncated file: ") + e.what());
}

AudioClip wav_read(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return wav_decode(bytes);
  } catch (const WavError& e) {
    throw WavError(e.kind(), std::string(e.what()) + " in '" + path.string() + "'");
  }
}

std::int16_t to_pcm16(Real sample) {
  if (std::isnan(sample)) throw NumericError("wav: NaN sample");
  const Real c = std::clamp(sample, Real{-1}, Real{1});
  const long v = std::lround(c * Real{32768});
  return static_cast<std::int16_t>(std::clamp(v, -32768L, 32767L));
}

std::vector<std::uint8_t> wav_encode(const AudioClip& clip) {
  const auto data_len = static_cast<std::uint32_t>(clip.samples.size() * 2);
  ByteWriter out;
  out.tag("RIFF");
  out.u32(36 + data_len);
  out.tag("WAVE");
  out.tag("fmt ");
  out.u32(16);
  out.u16(kFormatPcm);
  out.u16(1);
  out.u32(clip.sample_rate);
  out.u32(clip.sample_rate * 2);
  out.u16(2);
  out.u16(16);
  out.tag("data");
  out.u32(data_len);
  for (Real s : clip.samples) out.u16(static_cast<std::uint16_t>(to_pcm16(s)));
  return out.take();
}

void wav_write(const AudioClip& clip, const std::filesystem::path& path) {
  write_file(path, wav_encode(clip));
}

}  // namespace rawnet
