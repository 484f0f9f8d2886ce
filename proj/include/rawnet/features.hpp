#pragma once

// Feature file layout (little-endian):
//   "RWNF" | u32 version | u32 n_frames | u32 feat_dim | u32 frame_size |
//   u32 sample_rate | n_frames * feat_dim float32 values, row-major.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rawnet/coder.hpp"
#include "rawnet/error.hpp"

namespace rawnet {

inline constexpr std::uint32_t kFeatureFileVersion = 1;

class FeatureFileError : public Error {
 public:
  using Error::Error;
};

std::vector<std::uint8_t> encode_features(const FeatureMatrix& feats);
FeatureMatrix decode_features(const std::vector<std::uint8_t>& bytes);
void write_features(const FeatureMatrix& feats, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

/// One line per frame, feat_dim comma-separated values printed with 9
/// significant digits (exact for float32).
std::string features_csv(const FeatureMatrix& feats);

/// Binary PGM (P5), frames along x and feature dims along y (dim 0 on top).
/// Values are min-max normalized to 0..255 over the whole matrix; a constant
/// matrix maps to mid gray (128).
std::vector<std::uint8_t> features_pgm(const FeatureMatrix& feats);

}  // namespace rawnet
