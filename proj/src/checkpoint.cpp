#include "rawnet/checkpoint.hpp"

#include <sstream>

#include "rawnet/byteio.hpp"
#include "rawnet/config.hpp"

namespace rawnet {

namespace {

constexpr const char* kOptPrefixes[] = {"opt.m:", "opt.v:", "opt.vhat:"};

void write_record(ByteWriter& out, const std::string& name, const Shape& shape, std::span<const Real> values) {
  out.u32(static_cast<std::uint32_t>(name.size()));
  out.raw(name);
  out.u32(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) out.u64(d);
  for (Real v : values) out.f32(static_cast<float>(v));
}

CheckpointError arch_error(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::architecture_mismatch, "checkpoint architecture mismatch: " + what);
}

}  // namespace

std::string rng_to_text(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_text(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng;
  if (!is) throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint: unreadable rng state");
  return rng;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::string text = model_config_text(ckpt.params.config) + train_config_text(ckpt.train) + optimizer_config_text(ckpt.optimizer) +
                     "state.step=" + std::to_string(ckpt.step) + "\n";
  if (!ckpt.rng_state.empty()) text += "state.rng=" + ckpt.rng_state + "\n";

  ByteWriter out;
  out.tag("RWNC");
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(text.size()));
  out.raw(text);
  for (const auto& [name, t] : ckpt.params.tensors) write_record(out, name, t.shape(), t.values());
  for (const auto& [name, slot] : ckpt.optimizer_state) {
    const Shape& shape = ckpt.params.at(name).shape();
    write_record(out, kOptPrefixes[0] + name, shape, slot.m);
    write_record(out, kOptPrefixes[1] + name, shape, slot.v);
    write_record(out, kOptPrefixes[2] + name, shape, slot.vhat);
  }
  return out.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) try {
  ByteReader in(bytes);
  if (bytes.size() < 4 || in.tag() != "RWNC")
    throw CheckpointError(CheckpointError::Kind::bad_magic, "not a checkpoint (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointError::Kind::version_mismatch,
                          "checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  const std::string text = in.str(in.u32());

  Checkpoint ckpt;
  RunConfig run;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    auto [key, value] = split_setting(line);
    if (key == "state.step") {
      ckpt.step = std::stoull(value);
    } else if (key == "state.rng") {
      ckpt.rng_state = value;
    } else if (key.rfind("model.", 0) == 0 || key.rfind("coder.", 0) == 0 || key.rfind("voder.", 0) == 0 ||
               key.rfind("optim.", 0) == 0 || key.rfind("train.", 0) == 0 || key.rfind("noise.", 0) == 0) {
      apply_setting(run, key, value);
    } else {
      throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint: unexpected header key '" + key + "'");
    }
  }
  try {
    run.model.validate();
  } catch (const ConfigError& e) {
    throw arch_error(e.what());
  }
  ckpt.params.config = run.model;
  ckpt.optimizer = run.optimizer;
  ckpt.train = run.train;

  std::map<std::string, Shape> expected;
  for (const auto& spec : param_specs(run.model)) expected.emplace(spec.name, spec.shape);

  while (in.remaining() > 0) {
    const std::string name = in.str(in.u32());
    const std::uint32_t rank = in.u32();
    if (rank == 0 || rank > 8)
      throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint: tensor '" + name + "' has rank " +
                                                                std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = in.u64();
    const std::size_t n = shape_size(shape);
    if (n * 4 > in.remaining())
      throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint truncated inside tensor '" + name + "'");
    std::vector<Real> values(n);
    for (auto& v : values) v = in.f32();

    std::string param = name;
    int slot_kind = -1;
    for (int k = 0; k < 3; ++k)
      if (name.rfind(kOptPrefixes[k], 0) == 0) {
        slot_kind = k;
        param = name.substr(std::string(kOptPrefixes[k]).size());
      }
    auto it = expected.find(param);
    if (it == expected.end()) throw arch_error("unexpected tensor '" + name + "'");
    if (it->second != shape)
      throw arch_error("tensor '" + name + "' has shape " + shape_str(shape) + ", config implies " +
                       shape_str(it->second));
    if (slot_kind < 0) {
      ckpt.params.tensors.insert_or_assign(name, Tensor(shape, std::move(values)));
    } else {
      auto& slot = ckpt.optimizer_state[param];
      (slot_kind == 0 ? slot.m : slot_kind == 1 ? slot.v : slot.vhat) = std::move(values);
    }
  }
  for (const auto& [name, shape] : expected)
    if (!ckpt.params.tensors.count(name))
      throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint ends before tensor '" + name + "'");
  for (const auto& [name, slot] : ckpt.optimizer_state)
    if (slot.m.empty() || slot.v.empty() || slot.vhat.empty())
      throw CheckpointError(CheckpointError::Kind::truncated,
                            "checkpoint ends inside the optimizer state for '" + name + "'");
  return ckpt;
} catch (const TruncatedError& e) {
  throw CheckpointError(CheckpointError::Kind::truncated, std::string("checkpoint truncated: ") + e.what());
} catch (const CheckpointError&) {
  throw;
} catch (const ConfigError& e) {
  throw CheckpointError(CheckpointError::Kind::corrupt, std::string("checkpoint header: ") + e.what());
} catch (const std::logic_error& e) {  // stoull
  throw CheckpointError(CheckpointError::Kind::corrupt, std::string("checkpoint header: ") + e.what());
}

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), "'" + path.string() + "': " + e.what());
  }
}

}  // namespace rawnet
