#include "styleinv/config.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "styleinv/errors.hpp"

namespace styleinv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& v) {
  U out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || !std::isfinite(out))
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string format_double(double d) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, p);
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename M>
Field size_field(M member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_unsigned<std::size_t>(k, v);
          },
          [member](const PipelineConfig& c) { return std::to_string(member(c)); }};
}

template <typename M>
Field u64_field(M member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_unsigned<std::uint64_t>(k, v);
          },
          [member](const PipelineConfig& c) { return std::to_string(member(c)); }};
}

template <typename M>
Field double_field(M member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = parse_double(k, v); },
          [member](const PipelineConfig& c) { return format_double(member(c)); }};
}

template <typename M>
Field bool_field(M member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = parse_bool(k, v); },
          [member](const PipelineConfig& c) { return std::string(member(c) ? "true" : "false"); }};
}

template <typename M>
Field list_field(M member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
            std::vector<std::size_t> out;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(parse_unsigned<std::size_t>(k, trim(item)));
            if (out.empty()) throw ConfigError(k + ": expected a comma-separated list");
            member(c) = std::move(out);
          },
          [member](const PipelineConfig& c) {
            std::string s;
            for (auto x : member(c)) s += (s.empty() ? "" : ",") + std::to_string(x);
            return s;
          }};
}

#define FIELD(kind, key, expr) {key, kind##_field([](auto& c) -> auto& { return c.expr; })}

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> fields = {
      FIELD(u64, "seed", seed),
      FIELD(size, "data.num_videos", data.num_videos),
      FIELD(size, "data.length", data.length),
      FIELD(u64, "data.seed", data.seed),
      FIELD(size, "decoder.z_dim", decoder.z_dim),
      FIELD(size, "decoder.w_dim", decoder.w_dim),
      FIELD(size, "decoder.img_resolution", decoder.img_resolution),
      FIELD(list, "decoder.channels", decoder.channels),
      FIELD(size, "decoder.mapping_layers", decoder.mapping_layers),
      FIELD(double, "decoder.mapping_lr_mul", decoder.mapping_lr_mul),
      {"decoder.noise_mode",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.decoder.noise_mode = noise_mode_from_string(v); },
        [](const PipelineConfig& c) { return to_string(c.decoder.noise_mode); }}},
      FIELD(double, "ape.anchor_distance", ape.anchor_distance),
      FIELD(size, "ape.code_dim", ape.code_dim),
      FIELD(size, "ape.noise_dim", ape.noise_dim),
      FIELD(size, "ape.kernel_size", ape.kernel_size),
      FIELD(size, "ape.conv_layers", ape.conv_layers),
      FIELD(bool, "ape.first_frame_aware", ape.first_frame_aware),
      FIELD(size, "style.hidden_dim", style_hidden),
      FIELD(size, "style.dim", style_dim),
      FIELD(size, "encoder.stem_channels", encoder.stem_channels),
      FIELD(list, "encoder.channels", encoder.channels),
      FIELD(bool, "encoder.render_with_noise", render_with_noise),
      FIELD(size, "disc.stem_channels", disc.stem_channels),
      FIELD(list, "disc.channels", disc.channels),
      FIELD(size, "disc.feature_dim", disc.feature_dim),
      FIELD(size, "disc.delta_dim", disc.delta_dim),
      FIELD(size, "disc.hidden_dim", disc.hidden_dim),
      FIELD(size, "gan.steps", gan.steps),
      FIELD(size, "gan.batch", gan.batch),
      FIELD(double, "gan.lr_g", gan.lr_g),
      FIELD(double, "gan.lr_d", gan.lr_d),
      FIELD(double, "gan.r1_gamma", gan.r1_gamma),
      FIELD(size, "gan.r1_interval", gan.r1_interval),
      FIELD(size, "gan.mean_latent_samples", gan.mean_latent_samples),
      FIELD(size, "inversion.steps", inversion.steps),
      FIELD(size, "inversion.batch", inversion.batch),
      FIELD(double, "inversion.lr", inversion.lr),
      FIELD(size, "train.steps", train.steps),
      FIELD(size, "train.batch", train.batch),
      FIELD(double, "train.lr_encoder", train.lr_encoder),
      FIELD(double, "train.lr_d", train.lr_d),
      FIELD(double, "train.lambda_l2", train.lambda_l2),
      FIELD(double, "train.lambda_reg", train.lambda_reg),
      FIELD(double, "train.r1_gamma", train.r1_gamma),
      FIELD(size, "train.r1_interval", train.r1_interval),
      FIELD(size, "train.max_t", train.max_t),
      FIELD(double, "train.truncation", train.truncation),
      FIELD(bool, "train.ada_enabled", train.ada_enabled),
      FIELD(double, "train.ada_target", train.ada_target),
      FIELD(size, "train.ada_interval", train.ada_interval),
      FIELD(double, "train.ada_adjust", train.ada_adjust),
      FIELD(bool, "train.use_recon", train.use_recon),
      FIELD(bool, "train.first_frame_in_d", train.first_frame_in_d),
      FIELD(size, "train.log_interval", train.log_interval),
      FIELD(size, "train.checkpoint_interval", train.checkpoint_interval),
      FIELD(size, "transfer.steps", transfer.steps),
      FIELD(size, "transfer.batch", transfer.batch),
      FIELD(size, "transfer.freeze_resolution", transfer.freeze_resolution),
      FIELD(double, "transfer.lr", transfer.lr),
      FIELD(double, "transfer.lr_d", transfer.lr_d),
      FIELD(double, "transfer.lambda_perceptual", transfer.lambda_perceptual),
      FIELD(double, "transfer.lambda_identity", transfer.lambda_identity),
      FIELD(double, "transfer.r1_gamma", transfer.r1_gamma),
      FIELD(size, "transfer.r1_interval", transfer.r1_interval),
      FIELD(size, "eval.num_clips", eval.num_clips),
      FIELD(size, "eval.num_frames", eval.num_frames),
      FIELD(u64, "eval.feature_seed", eval.feature_seed),
  };
  return fields;
}

#undef FIELD

}  // namespace

void PipelineConfig::finalize() {
  decoder.img_channels = 3;
  decoder.validate();
  const std::size_t res = decoder.img_resolution;
  data.resolution = res;
  encoder.img_resolution = res;
  encoder.img_channels = decoder.img_channels;
  encoder.w_dim = decoder.w_dim;
  disc.img_resolution = res;
  disc.img_channels = decoder.img_channels;
  disc.num_frames = train.first_frame_in_d ? 4 : 3;
  ape.validate();
  encoder.validate();
  disc.validate();
  if (data.num_videos == 0) throw ConfigError("data.num_videos must be >= 1");
  if (train.max_t < 3) throw ConfigError("train.max_t must be >= 3");
  if (train.max_t >= data.length)
    throw ConfigError("train.max_t (" + std::to_string(train.max_t) + ") must be below data.length (" +
                      std::to_string(data.length) + ")");
  for (double lr : {train.lr_encoder, train.lr_d, gan.lr_g, gan.lr_d, inversion.lr, transfer.lr, transfer.lr_d})
    if (!(lr > 0)) throw ConfigError("learning rates must be positive");
  for (double l : {train.lambda_l2, train.lambda_reg, train.r1_gamma, gan.r1_gamma, transfer.lambda_perceptual,
                   transfer.lambda_identity, transfer.r1_gamma})
    if (l < 0) throw ConfigError("loss weights must be >= 0");
  if (!(train.truncation > 0 && train.truncation <= 1)) throw ConfigError("train.truncation must lie in (0,1]");
  if (!(train.ada_target > 0 && train.ada_target < 1)) throw ConfigError("train.ada_target must lie in (0,1)");
  for (std::size_t b : {train.batch, gan.batch, inversion.batch, transfer.batch})
    if (b == 0) throw ConfigError("batch sizes must be >= 1");
  for (std::size_t i : {train.r1_interval, gan.r1_interval, transfer.r1_interval, train.ada_interval})
    if (i == 0) throw ConfigError("intervals must be >= 1");
  if (!std::has_single_bit(transfer.freeze_resolution) || transfer.freeze_resolution < 4 ||
      transfer.freeze_resolution >= res)
    throw ConfigError("transfer.freeze_resolution must be a power of two in [4, " + std::to_string(res / 2) + "]");
  if (eval.num_frames < 16 || eval.num_frames > data.length)
    throw ConfigError("eval.num_frames must lie in [16, data.length]");
  if (eval.num_clips < 2) throw ConfigError("eval.num_clips must be >= 2");
}

StyleInVConfig PipelineConfig::styleinv() const {
  StyleInVConfig c;
  c.ape = ape;
  c.encoder = encoder;
  c.style_hidden = style_hidden;
  c.style_dim = style_dim;
  c.render_with_noise = render_with_noise;
  return c;
}

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (auto [pos, fresh] = seen.emplace(key, lineno); !fresh)
      throw ConfigError(where + "key '" + key + "' already set on line " + std::to_string(pos->second));
    try {
      it->second.set(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    cfg.finalize();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::map<std::string, std::string> config_entries(const PipelineConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : schema()) out[key] = field.get(cfg);
  return out;
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_entries(cfg)) out += key + " = " + value + "\n";
  return out;
}

}  // namespace styleinv
