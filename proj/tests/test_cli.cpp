#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "rawnet/audio.hpp"
#include "rawnet/byteio.hpp"
#include "rawnet/checkpoint.hpp"
#include "rawnet/cli.hpp"
#include "rawnet/config.hpp"

using namespace rawnet;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "rawnet");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("rawnet_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir / "data");
    AudioClip a, b;
    for (int i = 0; i < 900; ++i) a.samples.push_back(0.5 * std::sin(0.05 * i) + 0.1 * std::sin(0.9 * i));
    for (int i = 0; i < 400; ++i) b.samples.push_back(0.3 * std::sin(0.21 * i));
    wav_write(a, dir / "data" / "a.wav");
    wav_write(b, dir / "data" / "b.wav");
    std::ofstream cfg(dir / "small.cfg");
    cfg << model_config_text(ModelConfig::gradcheck()) << "train.clip_samples=64\ntrain.batch_size=2\n"
        << "train.checkpoint_every=3\n";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gradcheck", "--bogus"}).code == 2);
  CHECK(run({"gradcheck", "--scale", "huge"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("train, analyze, synthesize, copy-syn, resume") {
  Workspace ws;
  const auto cfg = ws.p("small.cfg");

  auto init = run({"train", ws.p("data"), "--out", ws.p("init.ckpt"), "--config", cfg, "--steps", "0"});
  REQUIRE_MESSAGE(init.code == 0, init.err);
  CHECK(init.out.empty());
  const Checkpoint ck0 = checkpoint_load(ws.p("init.ckpt"));
  CHECK(ck0.step == 0);
  CHECK(ck0.params.config == ModelConfig::gradcheck());

  auto whole = run({"train", ws.p("data"), "--out", ws.p("whole.ckpt"), "--config", cfg, "--steps", "6", "--seed", "5"});
  REQUIRE_MESSAGE(whole.code == 0, whole.err);
  auto first = run({"train", ws.p("data"), "--out", ws.p("part.ckpt"), "--config", cfg, "--steps", "3", "--seed", "5"});
  REQUIRE(first.code == 0);
  auto rest = run({"train", ws.p("data"), "--out", ws.p("part.ckpt"), "--resume", ws.p("part.ckpt"), "--steps", "6"});
  REQUIRE_MESSAGE(rest.code == 0, rest.err);
  CHECK(first.out + rest.out == whole.out);
  CHECK(read_file(ws.p("part.ckpt")) == read_file(ws.p("whole.ckpt")));

  // a clip shorter than clip_samples is skipped with a warning (b.wav has 400 >= 64, so none here)
  CHECK(whole.err.find("warning") == std::string::npos);

  // architecture overrides that disagree with the checkpoint are rejected
  auto clash = run({"train", ws.p("data"), "--out", ws.p("x.ckpt"), "--resume", ws.p("part.ckpt"), "--set",
                    "coder.feat_dim=5", "--steps", "7"});
  CHECK(clash.code == 1);
  CHECK(clash.err.find("coder.feat_dim") != std::string::npos);

  const auto ck = ws.p("whole.ckpt");
  auto an = run({"analyze", ws.p("data/a.wav"), "--checkpoint", ck, "--out", ws.p("a.feat")});
  REQUIRE_MESSAGE(an.code == 0, an.err);
  CHECK(an.out == "n_frames=113 feat_dim=4\n");
  auto sy = run({"synthesize", ws.p("a.feat"), "--checkpoint", ck, "--out", ws.p("a_syn.wav")});
  REQUIRE_MESSAGE(sy.code == 0, sy.err);
  CHECK(sy.out == "samples=904\n");
  auto cs = run({"copy-syn", ws.p("data/a.wav"), "--checkpoint", ck, "--out", ws.p("a_copy.wav")});
  REQUIRE_MESSAGE(cs.code == 0, cs.err);
  CHECK(cs.out.rfind("samples=904", 0) == 0);
  CHECK(read_file(ws.p("a_syn.wav")) == read_file(ws.p("a_copy.wav")));

  auto dump = run({"dump-features", ws.p("a.feat"), ws.p("a_dump")});
  CHECK(dump.code == 0);
  CHECK(fs::file_size(ws.p("a_dump.pgm")) == std::string("P5\n113 4\n255\n").size() + 113 * 4);

  // conditional sampler without a pitch source is a usage error
  CHECK(run({"synthesize", ws.p("a.feat"), "--checkpoint", ck, "--out", ws.p("c.wav"), "--sampler", "conditional"})
            .code == 2);
  auto pitched = run({"synthesize", ws.p("a.feat"), "--checkpoint", ck, "--out", ws.p("c.wav"), "--sampler",
                      "conditional", "--pitch-from", ws.p("data/a.wav"), "--seed", "1"});
  CHECK_MESSAGE(pitched.code == 0, pitched.err);
  auto unseeded = run({"synthesize", ws.p("a.feat"), "--checkpoint", ck, "--out", ws.p("m.wav"), "--sampler",
                       "multinomial"});
  CHECK(unseeded.code == 0);
  CHECK(unseeded.err.find("warning") != std::string::npos);

  // runtime errors exit with 1 and name the file
  write_file(ws.p("bad.ckpt"), std::vector<std::uint8_t>{'R', 'W', 'N', 'C', 1, 0});
  auto bad = run({"analyze", ws.p("data/a.wav"), "--checkpoint", ws.p("bad.ckpt"), "--out", ws.p("z.feat")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("bad.ckpt") != std::string::npos);

  AudioClip tiny;
  tiny.samples.assign(5, 0.1);
  wav_write(tiny, ws.dir / "tiny.wav");
  CHECK(run({"analyze", ws.p("tiny.wav"), "--checkpoint", ck, "--out", ws.p("t.feat")}).code == 1);

  fs::create_directories(ws.dir / "empty");
  auto empty = run({"train", ws.p("empty"), "--out", ws.p("e.ckpt"), "--config", cfg});
  CHECK(empty.code == 1);
  CHECK(empty.err.find("empty dataset") != std::string::npos);
}

TEST_CASE("denoise subcommand") {
  Workspace ws;
  AudioClip c;
  for (int i = 0; i < 1600; ++i) c.samples.push_back(i < 800 ? 0.0001 * std::sin(0.3 * i) : 0.5 * std::sin(0.1 * i));
  wav_write(c, ws.dir / "n.wav");
  auto r = run({"denoise", ws.p("n.wav"), "--out", ws.p("d.wav"), "--hangover", "0"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "frames=10 active=5\n");
  const AudioClip d = wav_read(ws.dir / "d.wav");
  for (int i = 0; i < 800; ++i) CHECK(d.samples[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("gradcheck subcommand") {
  auto ok = run({"gradcheck", "--scale", "tiny"});
  CHECK_MESSAGE(ok.code == 0, ok.out);
  CHECK(ok.out.find("dense") != std::string::npos);
  auto planted = run({"gradcheck", "--scale", "tiny", "--plant-sign-flip"});
  CHECK(planted.code == 1);
  CHECK(planted.out.find("failing: dense") != std::string::npos);
}

}  // TEST_SUITE
