#include "rawnet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rawnet/error.hpp"

namespace rawnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

ConfigError bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  return ConfigError("config key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                     std::string(value) + "'");
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw bad_value(key, v, "a non-negative integer");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw bad_value(key, v, "a non-negative integer");
  return out;
}

Real to_real(std::string_view key, std::string_view v) {
  Real out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw bad_value(key, v, "a number");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw bad_value(key, v, "true or false");
}

// "16:9:2,32:9:2,pool:2" -> conv and maxpool specs.
std::vector<LayerSpec> parse_stack(std::string_view key, std::string_view v, Activation act) {
  std::vector<LayerSpec> stack;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
    if (item.rfind("pool:", 0) == 0) {
      stack.push_back(CoderConfig::pool(to_size(key, item.substr(5))));
      continue;
    }
    const auto c1 = item.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : item.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw bad_value(key, item, "channels:kernel:stride or pool:width");
    stack.push_back(CoderConfig::conv(to_size(key, item.substr(0, c1)), to_size(key, item.substr(c1 + 1, c2 - c1 - 1)),
                                      to_size(key, item.substr(c2 + 1)), act));
  }
  if (stack.empty()) throw bad_value(key, v, "at least one layer");
  return stack;
}

std::string stack_text(const std::vector<LayerSpec>& stack) {
  std::string out;
  for (const auto& l : stack) {
    if (!out.empty()) out += ',';
    if (l.kind == LayerKind::maxpool)
      out += "pool:" + std::to_string(l.kernel);
    else
      out += std::to_string(l.out) + ':' + std::to_string(l.kernel) + ':' + std::to_string(l.stride);
  }
  return out;
}

Activation conv_activation(const CoderConfig& c) {
  for (const auto& l : c.stack)
    if (l.kind == LayerKind::conv1d) return l.activation;
  return Activation::relu;
}

}  // namespace

std::string format_real(Real v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::pair<std::string, std::string> split_setting(std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ConfigError("config line without '=': '" + std::string(line) + "'");
  return {std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  auto& m = cfg.model;
  if (key == "model.sample_rate") {
    m.sample_rate = static_cast<std::uint32_t>(to_size(key, value));
  } else if (key == "coder.stack") {
    m.coder.stack = parse_stack(key, value, conv_activation(m.coder));
  } else if (key == "coder.activation") {
    const Activation act = parse_activation(value);
    for (auto& l : m.coder.stack)
      if (l.kind == LayerKind::conv1d) l.activation = act;
  } else if (key == "coder.dense_dim") {
    m.coder.dense_dim = to_size(key, value);
  } else if (key == "coder.gru_hidden") {
    m.coder.gru_hidden = to_size(key, value);
  } else if (key == "coder.feat_dim") {
    m.coder.feat_dim = to_size(key, value);
  } else if (key == "voder.cond_channels") {
    m.voder.cond_channels = to_size(key, value);
  } else if (key == "voder.cond_kernel") {
    m.voder.cond_kernel = to_size(key, value);
  } else if (key == "voder.cond_dim") {
    m.voder.cond_dim = to_size(key, value);
  } else if (key == "voder.embed_dim") {
    m.voder.embed_dim = to_size(key, value);
  } else if (key == "voder.gru1_hidden") {
    m.voder.gru1_hidden = to_size(key, value);
  } else if (key == "voder.gru2_hidden") {
    m.voder.gru2_hidden = to_size(key, value);
  } else if (key == "voder.levels") {
    m.voder.levels = to_size(key, value);
  } else if (key == "train.clip_samples") {
    cfg.train.clip_samples = to_size(key, value);
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = to_size(key, value);
  } else if (key == "train.steps") {
    cfg.train.steps = to_size(key, value);
  } else if (key == "train.seed") {
    cfg.train.seed = to_u64(key, value);
  } else if (key == "train.checkpoint_every") {
    cfg.train.checkpoint_every = to_size(key, value);
  } else if (key == "train.clip_norm") {
    cfg.train.clip_norm = to_real(key, value);
  } else if (key == "train.f32_state") {
    cfg.train.f32_state = to_bool(key, value);
  } else if (key == "noise.voder_sigma") {
    cfg.train.noise.voder_sigma = to_real(key, value);
  } else if (key == "noise.coder_sigma") {
    cfg.train.noise.coder_sigma = to_real(key, value);
  } else if (key == "optim.lr") {
    cfg.optimizer.lr = to_real(key, value);
  } else if (key == "optim.beta1") {
    cfg.optimizer.beta1 = to_real(key, value);
  } else if (key == "optim.beta2") {
    cfg.optimizer.beta2 = to_real(key, value);
  } else if (key == "optim.eps") {
    cfg.optimizer.eps = to_real(key, value);
  } else if (key == "sampler.strategy") {
    cfg.sampler.strategy = parse_sampler(value);
  } else if (key == "sampler.c") {
    cfg.sampler.c = to_real(key, value);
  } else if (key == "sampler.pc_gain") {
    cfg.sampler.pc_gain = to_real(key, value);
  } else if (key == "sampler.seed") {
    cfg.sampler.seed = to_u64(key, value);
  } else if (key == "vad.frame_size") {
    cfg.vad.frame_size = to_size(key, value);
  } else if (key == "vad.threshold_db") {
    cfg.vad.threshold_db = to_real(key, value);
  } else if (key == "vad.hangover_frames") {
    cfg.vad.hangover_frames = to_size(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      const auto [key, value] = split_setting(line);
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string model_config_text(const ModelConfig& m) {
  std::ostringstream os;
  os << "model.sample_rate=" << m.sample_rate << '\n'
     << "coder.stack=" << stack_text(m.coder.stack) << '\n'
     << "coder.activation=" << activation_name(conv_activation(m.coder)) << '\n'
     << "coder.dense_dim=" << m.coder.dense_dim << '\n'
     << "coder.gru_hidden=" << m.coder.gru_hidden << '\n'
     << "coder.feat_dim=" << m.coder.feat_dim << '\n'
     << "voder.cond_channels=" << m.voder.cond_channels << '\n'
     << "voder.cond_kernel=" << m.voder.cond_kernel << '\n'
     << "voder.cond_dim=" << m.voder.cond_dim << '\n'
     << "voder.embed_dim=" << m.voder.embed_dim << '\n'
     << "voder.gru1_hidden=" << m.voder.gru1_hidden << '\n'
     << "voder.gru2_hidden=" << m.voder.gru2_hidden << '\n'
     << "voder.levels=" << m.voder.levels << '\n';
  return os.str();
}

std::string optimizer_config_text(const OptimizerConfig& o) {
  return "optim.lr=" + format_real(o.lr) + "\noptim.beta1=" + format_real(o.beta1) +
         "\noptim.beta2=" + format_real(o.beta2) + "\noptim.eps=" + format_real(o.eps) + "\n";
}

std::string train_config_text(const TrainConfig& t) {
  std::ostringstream os;
  os << "train.clip_samples=" << t.clip_samples << '\n'
     << "train.batch_size=" << t.batch_size << '\n'
     << "train.steps=" << t.steps << '\n'
     << "train.seed=" << t.seed << '\n'
     << "train.checkpoint_every=" << t.checkpoint_every << '\n'
     << "train.clip_norm=" << format_real(t.clip_norm) << '\n'
     << "train.f32_state=" << (t.f32_state ? "true" : "false") << '\n'
     << "noise.voder_sigma=" << format_real(t.noise.voder_sigma) << '\n'
     << "noise.coder_sigma=" << format_real(t.noise.coder_sigma) << '\n';
  return os.str();
}

std::string config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << model_config_text(cfg.model) << train_config_text(cfg.train) << optimizer_config_text(cfg.optimizer)
     << "sampler.strategy=" << sampler_name(cfg.sampler.strategy) << '\n'
     << "sampler.c=" << format_real(cfg.sampler.c) << '\n'
     << "sampler.pc_gain=" << format_real(cfg.sampler.pc_gain) << '\n'
     << "sampler.seed=" << cfg.sampler.seed << '\n'
     << "vad.frame_size=" << cfg.vad.frame_size << '\n'
     << "vad.threshold_db=" << format_real(cfg.vad.threshold_db) << '\n'
     << "vad.hangover_frames=" << cfg.vad.hangover_frames << '\n';
  return os.str();
}

}  // namespace rawnet
