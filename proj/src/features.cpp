#include "rawnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rawnet/byteio.hpp"

namespace rawnet {

std::vector<std::uint8_t> encode_features(const FeatureMatrix& feats) {
  if (feats.values.size() != feats.n_frames * feats.feat_dim)
    throw ShapeError("feature matrix holds " + std::to_string(feats.values.size()) + " values, expected " +
                     std::to_string(feats.n_frames * feats.feat_dim));
  ByteWriter out;
  out.tag("RWNF");
  out.u32(kFeatureFileVersion);
  out.u32(static_cast<std::uint32_t>(feats.n_frames));
  out.u32(static_cast<std::uint32_t>(feats.feat_dim));
  out.u32(static_cast<std::uint32_t>(feats.frame_size));
  out.u32(feats.sample_rate);
  for (Real v : feats.values) out.f32(static_cast<float>(v));
  return out.take();
}

FeatureMatrix decode_features(const std::vector<std::uint8_t>& bytes) try {
  ByteReader in(bytes);
  if (bytes.size() < 4 || in.tag() != "RWNF") throw FeatureFileError("not a feature file (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kFeatureFileVersion)
    throw FeatureFileError("feature file version " + std::to_string(version) + " unsupported");
  FeatureMatrix fm;
  fm.n_frames = in.u32();
  fm.feat_dim = in.u32();
  fm.frame_size = in.u32();
  fm.sample_rate = in.u32();
  if (fm.n_frames == 0 || fm.feat_dim == 0) throw FeatureFileError("feature file has an empty matrix");
  const std::size_t n = fm.n_frames * fm.feat_dim;
  if (in.remaining() != n * 4)
    throw FeatureFileError("feature payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                           std::to_string(n * 4));
  fm.values.resize(n);
  for (auto& v : fm.values) v = in.f32();
  return fm;
} catch (const TruncatedError& e) {
  throw FeatureFileError(std::string("feature file truncated: ") + e.what());
}

void write_features(const FeatureMatrix& feats, const std::filesystem::path& path) {
  write_file(path, encode_features(feats));
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_features(bytes);
  } catch (const FeatureFileError& e) {
    throw FeatureFileError("'" + path.string() + "': " + e.what());
  }
}

std::string features_csv(const FeatureMatrix& feats) {
  std::string out;
  char buf[32];
  for (std::size_t f = 0; f < feats.n_frames; ++f) {
    for (std::size_t d = 0; d < feats.feat_dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(feats.values[f * feats.feat_dim + d])));
      if (d) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<std::uint8_t> features_pgm(const FeatureMatrix& feats) {
  const std::string header =
      "P5\n" + std::to_string(feats.n_frames) + " " + std::to_string(feats.feat_dim) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto [lo_it, hi_it] = std::minmax_element(feats.values.begin(), feats.values.end());
  const Real lo = feats.values.empty() ? 0 : *lo_it;
  const Real range = feats.values.empty() ? 0 : *hi_it - lo;
  for (std::size_t d = 0; d < feats.feat_dim; ++d)
    for (std::size_t f = 0; f < feats.n_frames; ++f) {
      const Real v = feats.values[f * feats.feat_dim + d];
      const auto px = range > 0 ? static_cast<std::uint8_t>(std::lround((v - lo) / range * 255)) : std::uint8_t{128};
      out.push_back(px);
    }
  return out;
}

}  // namespace rawnet
