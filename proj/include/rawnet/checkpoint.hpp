#pragma once

// Checkpoint byte layout (all integers little-endian):
//   "RWNC" | u32 version | u32 text length | config text (key=value lines)
//   then until end of file, one record per tensor:
//   u32 name length | name | u32 rank | rank x u64 dims | float32 values
// Optimizer moments are stored as extra records named opt.m:<param>,
// opt.v:<param> and opt.vhat:<param>.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rawnet/error.hpp"
#include "rawnet/model.hpp"
#include "rawnet/trainer.hpp"

namespace rawnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { bad_magic, version_mismatch, architecture_mismatch, truncated, corrupt };
  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Checkpoint {
  ModelParams params;
  OptimizerConfig optimizer;
  TrainConfig train;
  std::map<std::string, AmsGrad::Slot> optimizer_state;
  std::string rng_state;  // textual engine state; empty when not saved
  std::uint64_t step = 0;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Errors carry the file name.
Checkpoint checkpoint_load(const std::filesystem::path& path);

std::string rng_to_text(const Rng& rng);
Rng rng_from_text(const std::string& text);

}  // namespace rawnet
