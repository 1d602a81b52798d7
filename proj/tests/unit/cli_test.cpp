#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "styleinv/checkpoint.hpp"
#include "styleinv/cli.hpp"
#include "styleinv/image_io.hpp"
#include "styleinv/pipeline.hpp"
#include "support/tiny.hpp"

using namespace styleinv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

/// Scratch directory holding a tiny config and the checkpoints trained from it.
/// Built once and shared by the test cases below.
struct Workspace {
  fs::path dir = fs::temp_directory_path() / "styleinv_cli_test";
  fs::path cfg = dir / "tiny.cfg";
  fs::path gan = dir / "gan.ckpt", inv = dir / "inv.ckpt", model = dir / "model.ckpt", child = dir / "child.ckpt";

  Workspace() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(cfg, serialize_config(testing::tiny_pipeline()));
    const auto step = [](std::vector<std::string> a) {
      const auto r = cli(std::move(a));
      REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    };
    step({"pretrain-gan", "--config", cfg.string(), "--out", gan.string()});
    step({"pretrain-encoder", "--checkpoint", gan.string(), "--out", inv.string()});
    step({"train-styleinv", "--checkpoint", inv.string(), "--out", model.string()});
    step({"finetune-style", "--checkpoint", model.string(), "--out", child.string()});
  }

  static Workspace& get() {
    static Workspace w;
    return w;
  }
};

}  // namespace

TEST_CASE("CLI usage and config errors exit with code 2") {
  auto& ws = Workspace::get();
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"launch-rockets"}).code == kExitConfig);
  CHECK(cli({"pretrain-gan", "--out", "x"}).code == kExitConfig);
  CHECK(cli({"--help"}).code == kExitOk);

  const auto bad = ws.dir / "bad.cfg";
  write_text(bad, "decoder.img_resolution = banana\n");
  CHECK(cli({"pretrain-gan", "--config", bad.string(), "--out", (ws.dir / "x.ckpt").string()}).code == kExitConfig);
  write_text(bad, "decoder.img_resolution = 48\n");
  const auto r = cli({"pretrain-gan", "--config", bad.string(), "--out", (ws.dir / "x.ckpt").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("power of two") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.dir / "x.ckpt"));
  CHECK(cli({"generate", "--checkpoint", ws.model.string(), "--out", (ws.dir / "g").string(), "--truncation", "2"})
            .code == kExitConfig);
  CHECK(cli({"generate", "--checkpoint", ws.model.string(), "--out", (ws.dir / "g").string(), "--frames", "0"}).code ==
        kExitConfig);

  setenv("STYLEINV_SEED", "twelve", 1);
  CHECK(cli({"pretrain-gan", "--config", ws.cfg.string(), "--out", (ws.dir / "x.ckpt").string()}).code == kExitConfig);
  unsetenv("STYLEINV_SEED");
}

TEST_CASE("CLI checkpoint errors exit with code 3") {
  auto& ws = Workspace::get();
  const auto out = (ws.dir / "y.ckpt").string();
  CHECK(cli({"pretrain-encoder", "--checkpoint", (ws.dir / "absent.ckpt").string(), "--out", out}).code ==
        kExitCheckpoint);
  auto bytes = read_bytes(ws.inv);
  bytes[bytes.size() / 2] ^= 0x11;
  write_text(ws.dir / "corrupt.ckpt", bytes);
  CHECK(cli({"train-styleinv", "--checkpoint", (ws.dir / "corrupt.ckpt").string(), "--out", out}).code ==
        kExitCheckpoint);
  const auto r = cli({"generate", "--checkpoint", ws.model.string(), "--decoder", ws.child.string(), "--out",
                      (ws.dir / "g").string()});
  CHECK(r.code == kExitOk);
  // a child decoder must come from the checkpoint's own decoder
  const auto other = (ws.dir / "other.ckpt").string();
  setenv("STYLEINV_SEED", "9", 1);
  REQUIRE(cli({"pretrain-gan", "--config", ws.cfg.string(), "--out", other}).code == kExitOk);
  unsetenv("STYLEINV_SEED");
  CHECK(cli({"generate", "--checkpoint", other, "--decoder", ws.child.string(), "--out", (ws.dir / "g").string()})
            .code == kExitCheckpoint);
}

TEST_CASE("CLI numeric blow-up exits with code 4") {
  auto& ws = Workspace::get();
  const auto cfg = ws.dir / "hot.cfg";
  write_text(cfg, serialize_config(testing::tiny_pipeline("gan.lr_g = 1e30\ngan.lr_d = 1e30\n")));
  const auto r = cli({"pretrain-gan", "--config", cfg.string(), "--out", (ws.dir / "hot.ckpt").string()});
  CHECK(r.code == kExitNumeric);
  CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("generate is deterministic and matches the library render") {
  auto& ws = Workspace::get();
  const auto a = ws.dir / "ga", b = ws.dir / "gb";
  for (const auto& d : {a, b})
    REQUIRE(cli({"generate", "--checkpoint", ws.model.string(), "--seed", "11", "--frames", "6", "--out", d.string(),
                 "--contact-sheet"})
                .code == kExitOk);
  for (const auto& e : fs::directory_iterator(a)) CHECK(read_bytes(e.path()) == read_bytes(b / e.path().filename()));
  CHECK(fs::exists(a / "frame_000005.png"));
  CHECK_FALSE(fs::exists(a / "frame_000006.png"));

  const auto one = ws.dir / "one";
  REQUIRE(cli({"generate", "--checkpoint", ws.model.string(), "--seed", "11", "--frames", "1", "--out", one.string()})
              .code == kExitOk);
  CHECK(read_bytes(one / "frame_000000.png") == read_bytes(a / "frame_000000.png"));

  // independent render of G(styleinv(w0, 0)) with the video's noise
  const auto bundle = load_checkpoint(ws.model.string());
  Pipeline p(load_config(ws.cfg.string()));
  p.load(bundle);
  const auto w0 = sample_w0(p.decoder, 11);
  NoGradGuard ng;
  const auto w0v = constant(Tensor<float>(Shape{1, w0.size()}, std::vector<float>(w0.begin(), w0.end())));
  const auto lv = p.motion.latents(p.decoder, w0v, {11}, {{0.0}}).value();
  const std::vector<double> latent(lv.vec().begin(), lv.vec().end());
  const auto frame = render_latents(p.decoder, {latent}, 11, {0.0});
  write_png((ws.dir / "lib.png").string(), frame[0]);
  CHECK(read_bytes(ws.dir / "lib.png") == read_bytes(one / "frame_000000.png"));

  std::ifstream lat(one / "latents.txt");
  double t = -1.0;
  lat >> t;
  CHECK(t == 0.0);
  for (double v : latent) {
    double x = 0.0;
    lat >> x;
    CHECK(x == doctest::Approx(v).epsilon(1e-7));
  }
}

TEST_CASE("checkpoints written by the CLI reload into equal pipelines") {
  auto& ws = Workspace::get();
  const auto bundle = load_checkpoint(ws.model.string());
  CHECK(bundle.kind == "styleinv");
  for (const char* s : {"decoder", "raw_encoder", "styleinv", "video_disc", "image_disc"}) CHECK(bundle.has_section(s));
  Pipeline p(load_config(ws.cfg.string()));
  p.load(bundle);
  CHECK(p.to_bundle("styleinv").checksum() == bundle.checksum());
  CHECK(load_checkpoint(ws.child.string()).parent_checksum == bundle.checksum("decoder/"));

  const auto summary = ws.dir / "summary.json";
  const auto r = cli({"eval", "--checkpoint", ws.model.string(), "--summary", summary.string()});
  CHECK(r.code == kExitOk);
  CHECK(read_bytes(summary).find("fvd16") != std::string::npos);
  CHECK(cli({"export-dataset", "--config", ws.cfg.string(), "--out", (ws.dir / "data").string(), "--videos", "2"})
            .code == kExitOk);
  CHECK(fs::exists(ws.dir / "data" / "video_0001"));
  CHECK_FALSE(fs::exists(ws.dir / "data" / "video_0002"));
}
