#include "rawnet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "rawnet/audio.hpp"
#include "rawnet/byteio.hpp"
#include "rawnet/checkpoint.hpp"
#include "rawnet/coder.hpp"
#include "rawnet/config.hpp"
#include "rawnet/features.hpp"
#include "rawnet/gradcheck.hpp"
#include "rawnet/trainer.hpp"
#include "rawnet/voder.hpp"

namespace rawnet::cli {

namespace {

namespace fs = std::filesystem;

/// Usage problems detected after argument parsing (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

bool is_model_key(const std::string& key) {
  return key.rfind("model.", 0) == 0 || key.rfind("coder.", 0) == 0 || key.rfind("voder.", 0) == 0;
}

struct ConfigSources {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

struct LoadedConfig {
  RunConfig run;
  bool model_keys_set = false;
  std::vector<std::pair<std::string, std::string>> settings;  // in the order applied
};

LoadedConfig load_run_config(const ConfigSources& src) {
  LoadedConfig out;
  std::string text;
  if (!src.config_path.empty()) {
    std::ifstream f(src.config_path);
    if (!f) throw IoError("cannot open config '" + src.config_path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
    try {
      out.run = parse_config(text);
    } catch (const ConfigError& e) {
      throw ConfigError(src.config_path + ": " + e.what());
    }
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      line = line.substr(0, line.find('#'));
      if (line.find('=') == std::string::npos) continue;
      auto kv = split_setting(line);
      if (is_model_key(kv.first)) out.model_keys_set = true;
      out.settings.push_back(std::move(kv));
    }
  }
  for (const auto& kv : src.overrides) {
    const auto [key, value] = split_setting(kv);
    apply_setting(out.run, key, value);
    if (is_model_key(key)) out.model_keys_set = true;
    out.settings.emplace_back(key, value);
  }
  return out;
}

void check_architecture(const LoadedConfig& cfg, const ModelConfig& ckpt_model, const std::string& ckpt_path) {
  if (!cfg.model_keys_set || cfg.run.model == ckpt_model) return;
  std::istringstream want(model_config_text(cfg.run.model)), have(model_config_text(ckpt_model));
  std::string diff;
  for (std::string a, b; std::getline(want, a) && std::getline(have, b);)
    if (a != b) diff += " " + a + " (checkpoint has " + b.substr(b.find('=') + 1) + ")";
  throw CheckpointError(CheckpointError::Kind::architecture_mismatch,
                        "'" + ckpt_path + "': architecture in checkpoint differs from the configured one:" + diff);
}

void add_config_options(CLI::App* cmd, ConfigSources& src) {
  cmd->add_option("--config", src.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", src.overrides, "override a config key (key=value), repeatable");
}

struct SamplerFlags {
  std::optional<std::string> sampler;
  std::optional<Real> c;
  std::optional<Real> pc_gain;
  std::optional<std::uint64_t> seed;
  bool denoise = false;
  std::string pitch_from;
  std::string pitch_file;
};

void add_sampler_options(CLI::App* cmd, SamplerFlags& f) {
  cmd->add_option("--sampler", f.sampler, "argmax | multinomial | conditional | pitch_correlation");
  cmd->add_option("--c", f.c, "logit scale for voiced frames (conditional)");
  cmd->add_option("--pc-gain", f.pc_gain, "pitch-correlation gain");
  cmd->add_option("--seed", f.seed, "sampling seed");
  cmd->add_flag("--denoise", f.denoise, "apply energy VAD denoising to the output");
  cmd->add_option("--pitch-from", f.pitch_from, "WAV to estimate pitch from (pitch-dependent samplers)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--pitch-file", f.pitch_file, "CSV of period,correlation[,voiced] per frame")
      ->check(CLI::ExistingFile);
}

SamplerConfig resolve_sampler(const SamplerFlags& f, SamplerConfig base, bool seed_from_config, std::ostream& err) {
  if (f.sampler) {
    try {
      base.strategy = parse_sampler(*f.sampler);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (f.c) base.c = *f.c;
  if (f.pc_gain) base.pc_gain = *f.pc_gain;
  if (f.seed) {
    base.seed = *f.seed;
  } else if (base.strategy != SamplerKind::argmax && !seed_from_config) {
    base.seed = std::random_device{}();
    err << "warning: " << sampler_name(base.strategy)
        << " sampling without --seed is not reproducible (seed " << base.seed << ")\n";
  }
  try {
    base.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return base;
}

PitchInfo read_pitch_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open pitch file '" + path + "'");
  PitchInfo info;
  std::size_t line_no = 0;
  for (std::string line; std::getline(f, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string a, b, c;
    std::getline(is, a, ',');
    std::getline(is, b, ',');
    std::getline(is, c, ',');
    try {
      PitchFrame pf;
      pf.period = std::stoi(a);
      pf.correlation = std::stod(b);
      pf.voiced = c.empty() ? (pf.period > 0 && pf.correlation >= PitchConfig{}.voicing_threshold) : std::stoi(c) != 0;
      info.push_back(pf);
    } catch (const std::exception&) {
      throw Error("pitch file '" + path + "' line " + std::to_string(line_no) + ": expected period,correlation");
    }
  }
  return info;
}

std::optional<PitchInfo> resolve_pitch(const SamplerFlags& f, const SamplerConfig& sampler, std::size_t frame_size,
                                       const AudioClip* fallback) {
  if (!f.pitch_file.empty()) return read_pitch_csv(f.pitch_file);
  if (!f.pitch_from.empty()) return estimate_pitch(wav_read(f.pitch_from), frame_size);
  if (sampler.needs_pitch()) {
    if (fallback != nullptr) return estimate_pitch(*fallback, frame_size);
    throw UsageError(std::string("sampler '") + std::string(sampler_name(sampler.strategy)) +
                     "' needs --pitch-from <wav> or --pitch-file <csv>");
  }
  return std::nullopt;
}

Real snr_db(const std::vector<Real>& ref, const std::vector<Real>& test) {
  Real signal = 0, noise = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    signal += ref[i] * ref[i];
    noise += (ref[i] - test[i]) * (ref[i] - test[i]);
  }
  return 10 * std::log10(signal / noise);
}

std::vector<AudioClip> read_dataset(const std::string& dir, std::ostream& err) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw IoError("data directory '" + dir + "' does not exist");
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (entry.is_regular_file() && ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<AudioClip> clips;
  for (const auto& p : files) {
    try {
      clips.push_back(wav_read(p));
    } catch (const Error& e) {
      err << "warning: skipping " << p.string() << ": " << e.what() << '\n';
    }
  }
  if (clips.empty()) throw Error("empty dataset: no readable WAV files in '" + dir + "'");
  return clips;
}

struct TrainArgs {
  std::string data_dir;
  std::string out;
  std::string resume;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  ConfigSources cfg;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  LoadedConfig lc = load_run_config(a.cfg);
  RunConfig& cfg = lc.run;
  if (a.steps) cfg.train.steps = *a.steps;
  if (a.seed) cfg.train.seed = *a.seed;
  const auto dataset = read_dataset(a.data_dir, err);

  Checkpoint ckpt;
  Rng rng(cfg.train.seed);
  AmsGrad opt(cfg.optimizer);
  if (!a.resume.empty()) {
    ckpt = checkpoint_load(a.resume);
    check_architecture(lc, ckpt.params.config, a.resume);
    cfg.model = ckpt.params.config;
    // stored training settings, then anything given explicitly on this run
    cfg.train = ckpt.train;
    cfg.optimizer = ckpt.optimizer;
    for (const auto& [key, value] : lc.settings)
      if (!is_model_key(key)) apply_setting(cfg, key, value);
    if (a.steps) cfg.train.steps = *a.steps;
    if (!ckpt.rng_state.empty()) rng = rng_from_text(ckpt.rng_state);
    opt = AmsGrad(cfg.optimizer);
    opt.slots() = ckpt.optimizer_state;
  } else {
    ckpt.params = init_params(cfg.model, cfg.train.seed);
    if (cfg.train.f32_state) round_to_f32(ckpt.params);
  }
  cfg.train.validate(cfg.model.frame_size());

  auto save = [&](std::uint64_t step) {
    ckpt.step = step;
    ckpt.train = cfg.train;
    ckpt.optimizer = opt.config();
    ckpt.optimizer_state = opt.slots();
    ckpt.rng_state = rng_to_text(rng);
    checkpoint_save(ckpt, a.out);
  };
  out << std::setprecision(9);
  for (std::uint64_t step = ckpt.step; step < cfg.train.steps; ++step) {
    const auto batch = make_batch(dataset, cfg.train, rng, [&](const std::string& w) { err << "warning: " << w << '\n'; });
    const StepStats s = train_step(ckpt.params, batch, opt, cfg.train, step);
    out << step << ',' << s.loss << '\n';
    if (cfg.train.checkpoint_every > 0 && (step + 1) % cfg.train.checkpoint_every == 0) save(step + 1);
  }
  save(std::max<std::uint64_t>(ckpt.step, cfg.train.steps));
  return kExitOk;
}

struct AnalyzeArgs {
  std::string wav_in, checkpoint, feat_out;
  ConfigSources cfg;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const LoadedConfig lc = load_run_config(a.cfg);
  const Checkpoint ckpt = checkpoint_load(a.checkpoint);
  check_architecture(lc, ckpt.params.config, a.checkpoint);
  const AudioClip clip = wav_read(a.wav_in);
  const FeatureMatrix feats = coder_forward(clip, ckpt.params);
  write_features(feats, a.feat_out);
  out << "n_frames=" << feats.n_frames << " feat_dim=" << feats.feat_dim << '\n';
  return kExitOk;
}

struct SynthArgs {
  std::string input, checkpoint, wav_out;
  SamplerFlags sampler;
  ConfigSources cfg;
};

int cmd_synthesize(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedConfig lc = load_run_config(a.cfg);
  const SamplerConfig sampler = resolve_sampler(a.sampler, lc.run.sampler, false, err);
  const auto pitch_needed = sampler.needs_pitch();
  if (pitch_needed && a.sampler.pitch_from.empty() && a.sampler.pitch_file.empty())
    throw UsageError(std::string("sampler '") + std::string(sampler_name(sampler.strategy)) +
                     "' needs --pitch-from <wav> or --pitch-file <csv>");
  const Checkpoint ckpt = checkpoint_load(a.checkpoint);
  check_architecture(lc, ckpt.params.config, a.checkpoint);
  const FeatureMatrix feats = read_features(a.input);
  const auto pitch = resolve_pitch(a.sampler, sampler, ckpt.params.config.frame_size(), nullptr);
  AudioClip clip = synthesize(feats, ckpt.params, sampler, pitch ? &*pitch : nullptr);
  if (a.sampler.denoise) clip = vad_denoise(clip, lc.run.vad);
  wav_write(clip, a.wav_out);
  out << "samples=" << clip.size() << '\n';
  return kExitOk;
}

int cmd_copy_syn(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedConfig lc = load_run_config(a.cfg);
  const SamplerConfig sampler = resolve_sampler(a.sampler, lc.run.sampler, false, err);
  const Checkpoint ckpt = checkpoint_load(a.checkpoint);
  check_architecture(lc, ckpt.params.config, a.checkpoint);
  const AudioClip clip = wav_read(a.input);
  CopySynthesisOptions opts;
  opts.denoise = a.sampler.denoise;
  opts.vad = lc.run.vad;
  opts.pitch = resolve_pitch(a.sampler, sampler, ckpt.params.config.frame_size(), &clip);
  const AudioClip result = copy_synthesis(clip, ckpt.params, sampler, opts);
  wav_write(result, a.wav_out);
  out << "samples=" << result.size();
  if (result.size() == clip.size()) out << " snr_db=" << std::setprecision(6) << snr_db(clip.samples, result.samples);
  out << '\n';
  return kExitOk;
}

struct DenoiseArgs {
  std::string wav_in, wav_out;
  ConfigSources cfg;
  std::optional<std::size_t> frame_size;
  std::optional<Real> threshold_db;
  std::optional<std::size_t> hangover;
};

int cmd_denoise(const DenoiseArgs& a, std::ostream& out) {
  VadConfig vad = load_run_config(a.cfg).run.vad;
  if (a.frame_size) vad.frame_size = *a.frame_size;
  if (a.threshold_db) vad.threshold_db = *a.threshold_db;
  if (a.hangover) vad.hangover_frames = *a.hangover;
  if (vad.frame_size == 0) throw UsageError("--frame-size must be > 0");
  const AudioClip clip = wav_read(a.wav_in);
  const auto mask = vad_mask(clip.samples, vad);
  wav_write(vad_denoise(clip, vad), a.wav_out);
  out << "frames=" << mask.size() << " active=" << std::count(mask.begin(), mask.end(), true) << '\n';
  return kExitOk;
}

int cmd_dump_features(const std::string& input, const std::string& prefix, std::ostream& out) {
  const FeatureMatrix feats = read_features(input);
  const std::string csv = features_csv(feats);
  write_file(prefix + ".csv", std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
  write_file(prefix + ".pgm", features_pgm(feats));
  out << "wrote " << prefix << ".csv and " << prefix << ".pgm (" << feats.n_frames << "x" << feats.feat_dim
      << ")\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& scale, bool plant, std::ostream& out) {
  if (scale != "tiny") throw UsageError("gradcheck: only --scale tiny is supported");
  GradCheckSuiteOptions opts;
  opts.plant_sign_flip = plant;
  const auto reports = run_gradcheck_suite(opts);
  out << std::left << std::setw(24) << "op" << std::setw(10) << "checked" << std::setw(14) << "max_rel_err"
      << "status\n";
  std::vector<std::string> failing;
  for (const auto& r : reports) {
    out << std::setw(24) << r.name << std::setw(10) << r.checked << std::setw(14) << std::scientific
        << std::setprecision(3) << r.max_rel_error << std::defaultfloat << (r.passed ? "ok" : "FAIL") << '\n';
    if (!r.passed) failing.push_back(r.name + " (worst " + r.worst + ")");
  }
  if (failing.empty()) return kExitOk;
  out << "failing:";
  for (const auto& f : failing) out << ' ' << f << ';';
  out << '\n';
  return kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RawNet vocoder: learned-feature analysis and autoregressive synthesis"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train coder and voder jointly on a directory of WAV files");
  c_train->add_option("data_dir", train.data_dir, "directory of 16-bit mono WAV files")->required();
  c_train->add_option("--out,-o", train.out, "checkpoint to write")->required();
  c_train->add_option("--resume", train.resume, "continue from this checkpoint")->check(CLI::ExistingFile);
  c_train->add_option("--steps", train.steps, "total optimizer steps");
  c_train->add_option("--seed", train.seed, "training seed");
  add_config_options(c_train, train.cfg);

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "extract coder features from a WAV file");
  c_analyze->add_option("wav_in", analyze.wav_in)->required();
  c_analyze->add_option("--checkpoint", analyze.checkpoint)->required();
  c_analyze->add_option("--out,-o", analyze.feat_out, "feature file to write")->required();
  add_config_options(c_analyze, analyze.cfg);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synthesize", "generate a waveform from a feature file");
  c_synth->add_option("features", synth.input)->required();
  c_synth->add_option("--checkpoint", synth.checkpoint)->required();
  c_synth->add_option("--out,-o", synth.wav_out, "WAV to write")->required();
  add_sampler_options(c_synth, synth.sampler);
  add_config_options(c_synth, synth.cfg);

  SynthArgs copy;
  auto* c_copy = app.add_subcommand("copy-syn", "analyze then resynthesize a WAV file");
  c_copy->add_option("wav_in", copy.input)->required();
  c_copy->add_option("--checkpoint", copy.checkpoint)->required();
  c_copy->add_option("--out,-o", copy.wav_out, "WAV to write")->required();
  add_sampler_options(c_copy, copy.sampler);
  add_config_options(c_copy, copy.cfg);

  DenoiseArgs denoise;
  auto* c_denoise = app.add_subcommand("denoise", "zero low-energy frames (energy VAD)");
  c_denoise->add_option("wav_in", denoise.wav_in)->required();
  c_denoise->add_option("--out,-o", denoise.wav_out)->required();
  c_denoise->add_option("--frame-size", denoise.frame_size);
  c_denoise->add_option("--threshold-db", denoise.threshold_db);
  c_denoise->add_option("--hangover", denoise.hangover);
  add_config_options(c_denoise, denoise.cfg);

  std::string dump_in, dump_prefix;
  auto* c_dump = app.add_subcommand("dump-features", "write a feature file as CSV and a PGM image");
  c_dump->add_option("features", dump_in)->required();
  c_dump->add_option("out_prefix", dump_prefix)->required();

  std::string scale = "tiny";
  bool plant = false;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of every layer's backward pass");
  c_grad->add_option("--scale", scale, "problem scale (tiny)");
  c_grad->add_flag("--plant-sign-flip", plant, "corrupt the dense backward pass (self-test)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_train->parsed()) return cmd_train(train, out, err);
    if (c_analyze->parsed()) return cmd_analyze(analyze, out);
    if (c_synth->parsed()) return cmd_synthesize(synth, out, err);
    if (c_copy->parsed()) return cmd_copy_syn(copy, out, err);
    if (c_denoise->parsed()) return cmd_denoise(denoise, out);
    if (c_dump->parsed()) return cmd_dump_features(dump_in, dump_prefix, out);
    if (c_grad->parsed()) return cmd_gradcheck(scale, plant, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace rawnet::cli
