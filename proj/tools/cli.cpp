#include "styleinv/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "styleinv/checkpoint.hpp"
#include "styleinv/errors.hpp"
#include "styleinv/image_io.hpp"
#include "styleinv/report.hpp"
#include "styleinv/style_transfer.hpp"
#include "styleinv/training.hpp"

namespace fs = std::filesystem;

namespace styleinv {

namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::string decoder;
  std::string out;
  std::string log;
  std::string summary;
  std::string init_image;
  std::uint64_t seed = 0;
  std::size_t frames = 16;
  std::size_t fps_multiplier = 1;
  std::size_t videos = 0;
  double truncation = 1.0;
  bool contact_sheet = false;
};

void apply_seed_override(PipelineConfig& cfg) {
  const char* env = std::getenv("STYLEINV_SEED");
  if (env == nullptr) return;
  const std::string s(env);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("STYLEINV_SEED must be a non-negative integer, got '" + s + "'");
  cfg.seed = v;
}

PipelineConfig config_from_bundle(const CheckpointBundle& b, const std::string& origin) {
  std::string text;
  for (const auto& [k, v] : b.config) text += k + " = " + v + "\n";
  try {
    return parse_config(text, origin);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config echo is invalid: ") + e.what());
  }
}

// The explicit config wins over the checkpoint's echo.
PipelineConfig resolve_config(const Options& o, const CheckpointBundle* bundle) {
  PipelineConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  else if (bundle) cfg = config_from_bundle(*bundle, o.checkpoint);
  else throw ConfigError("--config is required");
  apply_seed_override(cfg);
  return cfg;
}

void require_sections(const CheckpointBundle& b, const std::string& path, std::initializer_list<const char*> sections) {
  for (const char* s : sections)
    if (!b.has_section(s)) throw CheckpointError(path + ": checkpoint has no '" + s + "' section");
}

std::unique_ptr<std::ofstream> open_log(const std::string& path) {
  if (path.empty()) return nullptr;
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw std::runtime_error("cannot write log file " + path);
  return f;
}

void save(const Pipeline& p, const std::string& kind, const std::string& path, std::ostream& out) {
  save_checkpoint(path, p.to_bundle(kind));
  out << "wrote " << path << "\n";
}

int cmd_pretrain_gan(const Options& o, std::ostream& out) {
  auto cfg = resolve_config(o, nullptr);
  Pipeline p(cfg);
  SyntheticDataset data(cfg.data);
  auto logf = open_log(o.log);
  MetricsLog log(logf.get());
  pretrain_image_gan(p.decoder, p.image_disc, data, cfg.gan, cfg.seed, log);
  save(p, "gan", o.out, out);
  return kExitOk;
}

int cmd_pretrain_encoder(const Options& o, std::ostream& out) {
  const auto bundle = load_checkpoint(o.checkpoint);
  require_sections(bundle, o.checkpoint, {"decoder"});
  auto cfg = resolve_config(o, &bundle);
  Pipeline p(cfg);
  p.load(bundle);
  SyntheticDataset data(cfg.data);
  auto logf = open_log(o.log);
  MetricsLog log(logf.get());
  pretrain_inversion(p.decoder, p.raw_encoder, data, cfg.inversion, cfg.seed, log);
  save(p, "inversion", o.out, out);
  return kExitOk;
}

int cmd_train_styleinv(const Options& o, std::ostream& out) {
  const auto bundle = load_checkpoint(o.checkpoint);
  require_sections(bundle, o.checkpoint, {"decoder", "raw_encoder"});
  auto cfg = resolve_config(o, &bundle);
  Pipeline p(cfg);
  if (bundle.kind == "styleinv") {
    p.load(bundle);
  } else {
    // fresh motion generator and video discriminator; their shapes follow
    // the training config, not the pretraining one
    import_decoder(bundle, p.decoder);
    import_params(bundle, "raw_encoder", p.raw_encoder.params());
    if (bundle.has_section("image_disc")) import_params(bundle, "image_disc", p.image_disc.params());
    p.motion.encoder().init_from_inversion(p.raw_encoder);
  }
  SyntheticDataset data(cfg.data);
  auto logf = open_log(o.log);
  MetricsLog log(logf.get());
  const std::size_t every = cfg.train.checkpoint_interval;
  train_styleinv(p, data, log, [&](std::size_t step) {
    if (every > 0 && (step + 1) % every == 0) save_checkpoint(o.out, p.to_bundle("styleinv"));
  });
  save(p, "styleinv", o.out, out);
  return kExitOk;
}

std::vector<Tensor<float>> transfer_targets(const PipelineConfig& cfg) {
  DatasetConfig dc = cfg.data;
  dc.remap_colors = true;
  SyntheticDataset data(dc);
  std::vector<Tensor<float>> targets;
  for (std::size_t v = 0; v < data.size(); ++v)
    for (std::size_t q = 0; q < 4; ++q) targets.push_back(data.frame(v, q * data.spec(v).length / 4));
  return targets;
}

int cmd_finetune_style(const Options& o, std::ostream& out) {
  const auto bundle = load_checkpoint(o.checkpoint);
  require_sections(bundle, o.checkpoint, {"decoder", "raw_encoder", "image_disc"});
  auto cfg = resolve_config(o, &bundle);
  Pipeline p(cfg);
  p.load(bundle);
  auto logf = open_log(o.log);
  MetricsLog log(logf.get());
  auto child = finetune_decoder(p.decoder, p.raw_encoder, p.image_disc, transfer_targets(cfg), cfg.transfer, cfg.seed, log);
  CheckpointBundle cb;
  cb.kind = "style_child";
  cb.config = config_entries(cfg);
  cb.parent_checksum = bundle.checksum("decoder/");
  export_decoder(cb, *child);
  save_checkpoint(o.out, cb);
  out << "wrote " << o.out << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  const auto bundle = load_checkpoint(o.checkpoint);
  require_sections(bundle, o.checkpoint, {"decoder", "styleinv"});
  auto cfg = resolve_config(o, &bundle);
  Pipeline p(cfg);
  p.load(bundle);
  std::unique_ptr<Decoder<float>> child;
  if (!o.decoder.empty()) {
    const auto cb = load_checkpoint(o.decoder);
    if (cb.parent_checksum != bundle.checksum("decoder/"))
      throw CheckpointError(o.decoder + ": decoder was not fine-tuned from the decoder in " + o.checkpoint);
    child = std::make_unique<Decoder<float>>(cfg.decoder, 0);
    import_decoder(cb, *child);
  }
  GenerateOptions g;
  g.frames = o.frames;
  g.fps_multiplier = o.fps_multiplier;
  g.truncation = o.truncation;
  if (!o.init_image.empty()) {
    require_sections(bundle, o.checkpoint, {"raw_encoder"});
    Tensor<float> img;
    try {
      img = read_png(o.init_image);
    } catch (const std::exception& e) {
      throw ConfigError("--init-image: " + std::string(e.what()));
    }
    const std::size_t r = cfg.decoder.img_resolution;
    if (img.shape() != Shape{3, r, r})
      throw ConfigError("--init-image must be an RGB image of " + std::to_string(r) + "x" + std::to_string(r) +
                        ", got " + img.shape().str());
    g.w0 = invert_image(p, img);
  }
  if (g.frames == 0 || g.fps_multiplier == 0) throw ConfigError("--frames and --fps-multiplier must be >= 1");
  std::vector<double> times;
  for (std::size_t k = 0; k < g.frames * g.fps_multiplier; ++k)
    times.push_back(static_cast<double>(k) / static_cast<double>(g.fps_multiplier));
  const auto w0 = g.w0 ? *g.w0 : sample_w0(p.decoder, o.seed, g.truncation);
  auto video = generate_at(p, child ? *child : p.decoder, o.seed, w0, times, true);

  fs::create_directories(o.out);
  char name[32];
  for (std::size_t k = 0; k < video.frames.size(); ++k) {
    std::snprintf(name, sizeof(name), "frame_%06zu.png", k);
    write_png((fs::path(o.out) / name).string(), video.frames[k]);
  }
  if (o.contact_sheet)
    write_png((fs::path(o.out) / "contact_sheet.png").string(),
              tile_images(video.frames, std::min<std::size_t>(8, video.frames.size())));
  std::ofstream lat(fs::path(o.out) / "latents.txt");
  char buf[32];
  for (std::size_t k = 0; k < video.latents.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", video.times[k]);
    lat << buf;
    for (double v : video.latents[k]) {
      std::snprintf(buf, sizeof(buf), " %.9g", v);
      lat << buf;
    }
    lat << "\n";
  }
  out << "wrote " << video.frames.size() << " frames to " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto bundle = load_checkpoint(o.checkpoint);
  require_sections(bundle, o.checkpoint, {"decoder", "styleinv"});
  auto cfg = resolve_config(o, &bundle);
  Pipeline p(cfg);
  p.load(bundle);
  SyntheticDataset data(cfg.data);
  const auto report = evaluate_model(p, data, cfg.eval);
  out << report.text();
  if (!o.summary.empty()) {
    std::ofstream f(o.summary);
    if (!f) throw std::runtime_error("cannot write summary " + o.summary);
    f << report.json();
  }
  return kExitOk;
}

int cmd_export_dataset(const Options& o, std::ostream& out) {
  auto cfg = resolve_config(o, nullptr);
  SyntheticDataset data(cfg.data);
  const std::size_t n = o.videos == 0 ? data.size() : std::min(o.videos, data.size());
  char name[32];
  for (std::size_t v = 0; v < n; ++v) {
    std::snprintf(name, sizeof(name), "video_%04zu", v);
    const auto dir = (fs::path(o.out) / name).string();
    fs::create_directories(dir);
    data.export_video(v, dir);
  }
  out << "exported " << n << " videos to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Video generation by temporal-style-modulated latent inversion", "styleinv");
  app.require_subcommand(1);
  Options o;

  auto* gan = app.add_subcommand("pretrain-gan", "Train the image decoder as a GAN on dataset frames");
  gan->add_option("--config", o.config, "Config file")->required();
  gan->add_option("--out", o.out, "Output checkpoint")->required();
  gan->add_option("--log", o.log, "Metrics log file");

  auto* enc = app.add_subcommand("pretrain-encoder", "Train the raw inversion encoder against a frozen decoder");
  enc->add_option("--checkpoint", o.checkpoint, "Checkpoint with a trained decoder")->required();
  enc->add_option("--config", o.config, "Config file (default: the checkpoint's)");
  enc->add_option("--out", o.out, "Output checkpoint")->required();
  enc->add_option("--log", o.log, "Metrics log file");

  auto* train = app.add_subcommand("train-styleinv", "Train the motion generator with sparse first-frame-aware clips");
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint with decoder and raw encoder")->required();
  train->add_option("--config", o.config, "Config file (default: the checkpoint's)");
  train->add_option("--out", o.out, "Output checkpoint")->required();
  train->add_option("--log", o.log, "Metrics log file");

  auto* style = app.add_subcommand("finetune-style", "Fine-tune a decoder copy on colour-remapped frames");
  style->add_option("--checkpoint", o.checkpoint, "Parent checkpoint")->required();
  style->add_option("--config", o.config, "Config file (default: the checkpoint's)");
  style->add_option("--out", o.out, "Output child decoder checkpoint")->required();
  style->add_option("--log", o.log, "Metrics log file");

  auto* gen = app.add_subcommand("generate", "Write a generated video as PNG frames");
  gen->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  gen->add_option("--config", o.config, "Config file (default: the checkpoint's)");
  gen->add_option("--decoder", o.decoder, "Fine-tuned child decoder to render with");
  gen->add_option("--seed", o.seed, "Video seed");
  gen->add_option("--frames", o.frames, "Frames at the training frame rate");
  gen->add_option("--fps-multiplier", o.fps_multiplier, "Frame-rate multiplier");
  gen->add_option("--init-image", o.init_image, "PNG whose inversion becomes the first-frame latent");
  gen->add_option("--truncation", o.truncation, "Truncation of the sampled first-frame latent")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_flag("--contact-sheet", o.contact_sheet, "Also write a tiled contact sheet");

  auto* ev = app.add_subcommand("eval", "Compute proxy metrics against the dataset");
  ev->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  ev->add_option("--config", o.config, "Config file (default: the checkpoint's)");
  ev->add_option("--summary", o.summary, "JSON summary output");

  auto* exp = app.add_subcommand("export-dataset", "Write dataset videos as PNG frame directories");
  exp->add_option("--config", o.config, "Config file")->required();
  exp->add_option("--out", o.out, "Output directory")->required();
  exp->add_option("--videos", o.videos, "Number of videos (default: all)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gan->parsed()) return cmd_pretrain_gan(o, out);
    if (enc->parsed()) return cmd_pretrain_encoder(o, out);
    if (train->parsed()) return cmd_train_styleinv(o, out);
    if (style->parsed()) return cmd_finetune_style(o, out);
    if (gen->parsed()) return cmd_generate(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (exp->parsed()) return cmd_export_dataset(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace styleinv
