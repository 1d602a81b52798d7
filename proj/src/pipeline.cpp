#include "styleinv/pipeline.hpp"

#include <algorithm>

#include "styleinv/errors.hpp"

namespace styleinv {

Pipeline::Pipeline(const PipelineConfig& c)
    : cfg(c),
      decoder(c.decoder, rng::derive_seed(c.seed, 10)),
      raw_encoder(c.encoder, rng::derive_seed(c.seed, 11), false),
      motion(c.styleinv(), c.decoder.w_dim, rng::derive_seed(c.seed, 12)),
      video_disc(c.disc, rng::derive_seed(c.seed, 13)),
      image_disc(c.disc, rng::derive_seed(c.seed, 14)) {}

void export_decoder(CheckpointBundle& bundle, const Decoder<float>& decoder, const std::string& section) {
  export_params(bundle, section, decoder.params());
  bundle.put(section + "/buffer.w_avg", decoder.mean_latent());
  bundle.metadata[section + ".w_avg_count"] = std::to_string(decoder.mean_latent_count());
}

void import_decoder(const CheckpointBundle& bundle, Decoder<float>& decoder, const std::string& section) {
  import_params(bundle, section, decoder.params());
  const std::string key = section + "/buffer.w_avg";
  if (!bundle.contains(key)) throw CheckpointError("checkpoint has no mean latent for " + section);
  const auto it = bundle.metadata.find(section + ".w_avg_count");
  try {
    decoder.set_mean_latent(bundle.at(key), it == bundle.metadata.end() ? 0 : std::stoull(it->second));
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("mean latent: ") + e.what());
  }
}

CheckpointBundle Pipeline::to_bundle(const std::string& kind) const {
  CheckpointBundle b;
  b.kind = kind;
  b.config = config_entries(cfg);
  export_decoder(b, decoder);
  export_params(b, "raw_encoder", raw_encoder.params());
  export_params(b, "styleinv", motion.ape().params());
  export_params(b, "styleinv", motion.style_head().params());
  export_params(b, "styleinv", motion.encoder().params());
  export_params(b, "video_disc", video_disc.params());
  export_params(b, "image_disc", image_disc.params());
  return b;
}

std::vector<std::string> Pipeline::load(const CheckpointBundle& b) {
  std::vector<std::string> loaded;
  if (b.has_section("decoder")) {
    import_decoder(b, decoder);
    loaded.push_back("decoder");
  }
  if (b.has_section("raw_encoder")) {
    import_params(b, "raw_encoder", raw_encoder.params());
    loaded.push_back("raw_encoder");
  }
  if (b.has_section("styleinv")) {
    import_params(b, "styleinv", motion.ape().params());
    import_params(b, "styleinv", motion.style_head().params());
    import_params(b, "styleinv", motion.encoder().params());
    loaded.push_back("styleinv");
  }
  if (b.has_section("video_disc")) {
    import_params(b, "video_disc", video_disc.params());
    loaded.push_back("video_disc");
  }
  if (b.has_section("image_disc")) {
    import_params(b, "image_disc", image_disc.params());
    loaded.push_back("image_disc");
  }
  return loaded;
}

std::unique_ptr<Decoder<float>> clone_decoder(const Decoder<float>& d) {
  auto out = std::make_unique<Decoder<float>>(d.config(), 0);
  out->params().copy_values_from(d.params());
  out->set_mean_latent(d.mean_latent(), d.mean_latent_count());
  return out;
}

std::vector<double> sample_w0(const Decoder<float>& decoder, std::uint64_t video_seed, double truncation) {
  NoGradGuard guard;
  const std::size_t zd = decoder.config().z_dim;
  std::vector<double> z(zd);
  rng::normal_block(video_seed, rng::Stream::latent, 0, z);
  auto w = decoder.map_latent(constant(Tensor<float>(Shape{1, zd}, std::vector<float>(z.begin(), z.end()))),
                              static_cast<float>(truncation));
  return {w.value().vec().begin(), w.value().vec().end()};
}

GeneratedVideo generate_at(const Pipeline& p, const Decoder<float>& decoder, std::uint64_t video_seed,
                           const std::vector<double>& w0, const std::vector<double>& times, bool render,
                           std::size_t chunk) {
  NoGradGuard guard;
  const std::size_t wd = decoder.config().w_dim;
  if (w0.size() != wd) throw ShapeError("w0 has " + std::to_string(w0.size()) + " entries, decoder expects " + std::to_string(wd));
  GeneratedVideo out;
  out.seed = video_seed;
  out.times = times;
  auto w0v = constant(Tensor<float>(Shape{1, wd}, std::vector<float>(w0.begin(), w0.end())));
  // latents always come from the pipeline's own decoder; `decoder` only renders
  auto first = p.motion.first_frames(p.decoder, w0v, {video_seed});
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < times.size(); begin += chunk) {
    const std::vector<double> part(times.begin() + static_cast<std::ptrdiff_t>(begin),
                                   times.begin() + static_cast<std::ptrdiff_t>(std::min(times.size(), begin + chunk)));
    auto lat = add(repeat_rows(w0v, part.size()), p.motion.residuals(first, w0v, {video_seed}, {part}));
    for (std::size_t j = 0; j < part.size(); ++j)
      out.latents.emplace_back(lat.value().vec().begin() + static_cast<std::ptrdiff_t>(j * wd),
                               lat.value().vec().begin() + static_cast<std::ptrdiff_t>((j + 1) * wd));
  }
  if (render) out.frames = render_latents(decoder, out.latents, video_seed, times, chunk);
  return out;
}

GeneratedVideo generate_video(const Pipeline& p, std::uint64_t video_seed, const GenerateOptions& opt) {
  if (opt.frames == 0 || opt.fps_multiplier == 0) throw ConfigError("frames and fps multiplier must be >= 1");
  std::vector<double> times;
  const std::size_t n = opt.frames * opt.fps_multiplier;
  for (std::size_t k = 0; k < n; ++k) times.push_back(static_cast<double>(k) / static_cast<double>(opt.fps_multiplier));
  const auto w0 = opt.w0 ? *opt.w0 : sample_w0(p.decoder, video_seed, opt.truncation);
  return generate_at(p, p.decoder, video_seed, w0, times, opt.render, opt.chunk);
}

std::vector<Tensor<float>> render_latents(const Decoder<float>& decoder, const std::vector<std::vector<double>>& latents,
                                          std::uint64_t video_seed, const std::vector<double>& times,
                                          std::size_t chunk) {
  NoGradGuard guard;
  const std::size_t wd = decoder.config().w_dim;
  if (latents.size() != times.size()) throw ShapeError("render_latents: one timestamp per latent required");
  for (const auto& l : latents)
    if (l.size() != wd)
      throw ShapeError("latent has " + std::to_string(l.size()) + " entries, decoder expects " + std::to_string(wd));
  const bool noisy = decoder.config().noise_mode != NoiseMode::off;
  std::vector<Tensor<float>> frames;
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < latents.size(); begin += chunk) {
    const std::size_t k = std::min(latents.size(), begin + chunk) - begin;
    Tensor<float> w(Shape{k, wd});
    std::vector<NoiseRealization<float>> noise;
    for (std::size_t j = 0; j < k; ++j) {
      std::copy(latents[begin + j].begin(), latents[begin + j].end(), w.vec().begin() + static_cast<std::ptrdiff_t>(j * wd));
      if (noisy) noise.push_back(decoder.sample_video_noise(decoder.frame_noise_seed(video_seed, times[begin + j])));
    }
    auto img = decoder.synthesize(constant(std::move(w)), noisy ? &noise : nullptr);
    const auto& s = img.shape();
    const std::size_t per = img.numel() / k;
    for (std::size_t j = 0; j < k; ++j)
      frames.emplace_back(Shape{s[1], s[2], s[3]},
                          std::vector<float>(img.value().vec().begin() + static_cast<std::ptrdiff_t>(j * per),
                                             img.value().vec().begin() + static_cast<std::ptrdiff_t>((j + 1) * per)));
  }
  return frames;
}

std::vector<double> invert_image(const Pipeline& p, const Tensor<float>& image) {
  NoGradGuard guard;
  const auto& s = image.shape();
  const std::size_t r = p.cfg.decoder.img_resolution;
  if (s.rank() != 3 || s[0] != 3 || s[1] != r || s[2] != r)
    throw ShapeError("image must be [3," + std::to_string(r) + "," + std::to_string(r) + "], got " + s.str());
  auto e = p.raw_encoder.forward(constant(image.reshaped(Shape{1, 3, r, r})));
  std::vector<double> w(e.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = e.value()[i] + p.decoder.mean_latent()[i];
  return w;
}

}  // namespace styleinv
