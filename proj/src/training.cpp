#include "styleinv/training.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "styleinv/errors.hpp"
#include "styleinv/optim.hpp"

namespace styleinv {

template <typename T>
Var<T> discriminator_loss(const Var<T>& real_logits, const Var<T>& fake_logits) {
  return add(mean(softplus(fake_logits)), mean(softplus(neg(real_logits))));
}

template <typename T>
Var<T> generator_loss(const Var<T>& fake_logits) {
  return mean(softplus(neg(fake_logits)));
}

template <typename T>
Var<T> recon_loss(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("recon_loss: " + a.shape().str() + " vs " + b.shape().str());
  return mean(square(sub(a, b)));
}

template <typename T>
Var<T> latent_reg(const Var<T>& residuals, std::size_t videos) {
  if (videos == 0) throw ShapeError("latent_reg over zero videos");
  return scale(sum(square(residuals)), T(1) / static_cast<T>(videos));
}

template <typename T>
Tensor<T> clip_deltas(const std::vector<std::array<double, 4>>& times, bool first_frame_in_d) {
  const std::size_t first = first_frame_in_d ? 0 : 1, gaps = 3 - first;
  Tensor<T> d(Shape{times.size(), gaps});
  for (std::size_t n = 0; n < times.size(); ++n)
    for (std::size_t i = 0; i < gaps; ++i)
      d[n * gaps + i] = static_cast<T>(times[n][first + i + 1] - times[n][first + i]);
  return d;
}

template <typename T>
std::vector<Var<T>> augment_clip(const std::vector<Var<T>>& clip, const std::vector<AugmentParams>& augment) {
  if (augment.empty()) return clip;
  std::vector<Var<T>> out;
  for (const auto& f : clip) out.push_back(apply_augment(f, augment));
  return out;
}

namespace {

// Row j of every group of `group` consecutive rows: [N*group, ...] -> [N, ...].
template <typename T>
Var<T> take_slot(const Var<T>& x, std::size_t group, std::size_t j) {
  const auto& s = x.shape();
  const std::size_t n = s[0] / group, rest = x.numel() / s[0];
  auto dims = s.dims();
  dims[0] = n;
  return reshape(slice(reshape(x, Shape{n, group, rest}), 1, j, 1), Shape(dims));
}

template <typename T>
std::vector<NoiseRealization<T>> clip_noise(const Decoder<T>& decoder, const std::vector<std::uint64_t>& seeds,
                                            const std::vector<std::array<double, 4>>& times, std::size_t from) {
  std::vector<NoiseRealization<T>> out;
  for (std::size_t n = 0; n < seeds.size(); ++n)
    for (std::size_t j = from; j < 4; ++j)
      out.push_back(decoder.sample_video_noise(decoder.frame_noise_seed(seeds[n], times[n][j])));
  return out;
}

}  // namespace

template <typename T>
EncoderObjective<T> encoder_objective(const Decoder<T>& decoder, const StyleInV<T>& motion,
                                      const VideoDiscriminator<T>& disc, const FakeBatch<T>& batch,
                                      const ObjectiveOptions& opt, const std::vector<AugmentParams>& augment) {
  const std::size_t n = batch.w0.shape()[0];
  if (batch.seeds.size() != n || batch.times.size() != n) throw ShapeError("fake batch sizes disagree");
  const bool noisy = decoder.config().noise_mode != NoiseMode::off;
  EncoderObjective<T> out;

  std::vector<std::vector<double>> times;
  for (const auto& t : batch.times) times.emplace_back(t.begin(), t.end());
  auto first = motion.first_frames(decoder, batch.w0, batch.seeds);
  out.residuals = motion.residuals(first, batch.w0, batch.seeds, times);
  auto lat = add(repeat_rows(batch.w0, 4), out.residuals);

  // G(w0) as the discriminator and the reconstruction term see it
  Var<T> g_w0 = first;
  if (noisy && !motion.config().render_with_noise) {
    std::vector<NoiseRealization<T>> nz;
    for (auto s : batch.seeds) nz.push_back(decoder.sample_video_noise(decoder.frame_noise_seed(s, 0.0)));
    g_w0 = decoder.synthesize(batch.w0, &nz);
  }

  const auto noise = clip_noise(decoder, batch.seeds, batch.times, 0);
  auto frames = decoder.synthesize(lat, noisy ? &noise : nullptr);
  std::vector<Var<T>> slots;
  for (std::size_t j = 0; j < 4; ++j) slots.push_back(take_slot(frames, 4, j));

  if (opt.first_frame_in_d) out.clip.push_back(g_w0);
  for (std::size_t j = 1; j < 4; ++j) out.clip.push_back(slots[j]);
  out.deltas = clip_deltas<T>(batch.times, opt.first_frame_in_d);

  auto logits = disc(augment_clip(out.clip, augment), out.deltas);
  out.loss_g = generator_loss(logits);
  out.recon = opt.use_recon ? recon_loss(g_w0, slots[0]) : constant(Tensor<T>(Shape{1}));
  out.reg = latent_reg(out.residuals, n);
  out.total = add(add(reshape(out.loss_g, Shape{1}), scale(reshape(out.recon, Shape{1}), static_cast<T>(opt.lambda_l2))),
                  scale(reshape(out.reg, Shape{1}), static_cast<T>(opt.lambda_reg)));
  return out;
}

void MetricsLog::record(std::size_t step, const std::vector<std::pair<std::string, double>>& values) {
  std::string line = "step=" + std::to_string(step);
  char buf[64];
  for (const auto& [name, v] : values) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    line += " " + name + "=" + buf;
  }
  if (sink_) *sink_ << line << '\n' << std::flush;
  lines_.push_back(std::move(line));
  records_.push_back(values);
}

double MetricsLog::last(const std::string& name) const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it)
    for (const auto& [k, v] : *it)
      if (k == name) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

double MetricsLog::recent_mean(const std::string& name, std::size_t count) const {
  double total = 0;
  std::size_t seen = 0;
  for (auto it = records_.rbegin(); it != records_.rend() && seen < count; ++it)
    for (const auto& [k, v] : *it)
      if (k == name) {
        total += v;
        ++seen;
      }
  return seen ? total / static_cast<double>(seen) : std::numeric_limits<double>::quiet_NaN();
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError(what + " became non-finite (" + std::to_string(v) + ")");
}

namespace {

Var<float> sample_z(rng::Generator& gen, std::size_t n, std::size_t dim) {
  Tensor<float> z(Shape{n, dim});
  for (auto& v : z.vec()) v = static_cast<float>(gen.normal());
  return constant(std::move(z));
}

double sign_mean(const Var<float>& logits) {
  double s = 0;
  for (float v : logits.value().vec()) s += v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
  return s / static_cast<double>(logits.numel());
}

// Fresh leaves holding the values of `x`, for gradient penalties on inputs.
Var<float> input_leaf(const Var<float>& x) { return Var<float>(x.value(), true); }

}  // namespace

void pretrain_image_gan(Decoder<float>& decoder, ImageDiscriminator<float>& disc, const SyntheticDataset& data,
                        const GanPretrainConfig& cfg, std::uint64_t seed, MetricsLog& log) {
  if (data.size() == 0) throw ConfigError("image GAN pretraining needs a nonempty dataset");
  rng::Generator gen(rng::derive_seed(seed, 0x67616e), rng::Stream::sampling);
  ClassAwareSampler sampler;
  for (std::size_t v = 0; v < data.size(); ++v) sampler.lengths.push_back(data.spec(v).length);
  const bool noisy = decoder.config().noise_mode != NoiseMode::off;
  decoder.params().set_requires_grad(true);
  disc.params().set_requires_grad(true);
  Adam<float> opt_g(decoder.params().entries(), {.lr = cfg.lr_g});
  Adam<float> opt_d(disc.params().entries(), {.lr = cfg.lr_d});
  const std::size_t n = cfg.batch;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    auto z = sample_z(gen, n, decoder.config().z_dim);
    std::vector<NoiseRealization<float>> noise;
    if (noisy)
      for (std::size_t i = 0; i < n; ++i) noise.push_back(decoder.sample_video_noise(gen.next_u64()));
    std::vector<Tensor<float>> reals;
    for (std::size_t i = 0; i < n; ++i) {
      auto [v, t] = sampler.sample(gen);
      reals.push_back(data.frame(v, t));
    }
    auto real = constant(stack_images(reals));

    // generator step
    disc.params().set_requires_grad(false);
    auto fake = decoder.synthesize(decoder.map_latent(z), noisy ? &noise : nullptr);
    auto loss_g = generator_loss(disc(fake));
    backward(loss_g);
    opt_g.step();
    disc.params().set_requires_grad(true);

    // discriminator step
    Var<float> fake_d;
    {
      NoGradGuard ng;
      fake_d = decoder.synthesize(decoder.map_latent(z), noisy ? &noise : nullptr);
    }
    auto real_logits = disc(real);
    auto loss_d = discriminator_loss(real_logits, disc(constant(fake_d.value())));
    double r1v = 0;
    Var<float> total = loss_d;
    if (cfg.r1_gamma > 0 && step % cfg.r1_interval == 0) {
      auto leaf = input_leaf(real);
      auto r1 = r1_penalty(disc(leaf), {leaf}, static_cast<float>(cfg.r1_gamma));
      r1v = r1.item();
      total = add(reshape(loss_d, Shape{1}), scale(r1, static_cast<float>(cfg.r1_interval)));
    }
    backward(total);
    opt_d.step();

    require_finite(loss_g.item(), "generator loss");
    require_finite(loss_d.item(), "discriminator loss");
    log.record(step, {{"loss_d", loss_d.item()}, {"loss_g", loss_g.item()}, {"r1", r1v}});
  }

  NoGradGuard ng;
  decoder.reset_mean_latent();
  rng::Generator wgen(rng::derive_seed(seed, 0x77617667), rng::Stream::latent);
  for (std::size_t done = 0; done < cfg.mean_latent_samples;) {
    const std::size_t k = std::min<std::size_t>(256, cfg.mean_latent_samples - done);
    decoder.map_latent_statistics(sample_z(wgen, k, decoder.config().z_dim));
    done += k;
  }
}

void pretrain_inversion(Decoder<float>& decoder, ConvEncoder<float>& encoder, const SyntheticDataset& data,
                        const InversionPretrainConfig& cfg, std::uint64_t seed, MetricsLog& log) {
  if (data.size() == 0) throw ConfigError("inversion pretraining needs a nonempty dataset");
  rng::Generator gen(rng::derive_seed(seed, 0x696e76), rng::Stream::sampling);
  ClassAwareSampler sampler;
  for (std::size_t v = 0; v < data.size(); ++v) sampler.lengths.push_back(data.spec(v).length);
  decoder.params().set_requires_grad(false);
  encoder.params().set_requires_grad(true);
  Adam<float> opt(encoder.params().entries(), {.lr = cfg.lr});
  const std::size_t n = cfg.batch, wd = decoder.config().w_dim;
  const bool noisy = decoder.config().noise_mode != NoiseMode::off;
  NoiseRealization<float> zero = decoder.sample_video_noise(0);
  for (auto& m : zero.maps) m.fill(0.0f);
  const std::vector<NoiseRealization<float>> noise(n, zero);
  auto w_avg = expand(constant(decoder.mean_latent().reshaped(Shape{1, wd})), Shape{n, wd});

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<Tensor<float>> xs;
    for (std::size_t i = 0; i < n; ++i) {
      auto [v, t] = sampler.sample(gen);
      xs.push_back(data.frame(v, t));
    }
    auto x = constant(stack_images(xs));
    auto rec = decoder.synthesize(add(encoder.forward(x), w_avg), noisy ? &noise : nullptr);
    auto loss = recon_loss(x, rec);
    backward(loss);
    opt.step();
    require_finite(loss.item(), "inversion loss");
    log.record(step, {{"recon", loss.item()}});
  }
  decoder.params().set_requires_grad(true);
}

double first_frame_error(const Decoder<float>& decoder, const StyleInV<float>& motion, const std::vector<double>& w0,
                         std::uint64_t noise_seed, std::uint64_t motion_seed) {
  NoGradGuard ng;
  const std::size_t wd = decoder.config().w_dim;
  if (w0.size() != wd) throw ShapeError("w0 dimension mismatch");
  auto w = constant(Tensor<float>(Shape{1, wd}, std::vector<float>(w0.begin(), w0.end())));
  const bool noisy = decoder.config().noise_mode != NoiseMode::off;
  std::vector<NoiseRealization<float>> nz;
  if (noisy) nz.push_back(decoder.sample_video_noise(decoder.frame_noise_seed(noise_seed, 0.0)));
  auto target = decoder.synthesize(w, noisy ? &nz : nullptr);
  auto enc_in = target;
  if (noisy && !motion.config().render_with_noise) enc_in = motion.first_frames(decoder, w, {noise_seed});
  auto lat = add(w, motion.residuals(enc_in, w, {motion_seed}, {{0.0}}));
  return recon_loss(target, decoder.synthesize(lat, noisy ? &nz : nullptr)).item();
}

void train_styleinv(Pipeline& p, const SyntheticDataset& data, MetricsLog& log,
                    const std::function<void(std::size_t)>& on_step) {
  const auto& cfg = p.cfg;
  const auto& tc = cfg.train;
  if (data.size() == 0) throw ConfigError("training needs a nonempty dataset");
  const std::size_t n = tc.batch, res = cfg.decoder.img_resolution;
  rng::Generator gen(rng::derive_seed(cfg.seed, 0x7374), rng::Stream::sampling);
  rng::Generator aug_gen(rng::derive_seed(cfg.seed, 0x6175), rng::Stream::augment);

  p.decoder.params().set_requires_grad(false);
  p.video_disc.params().set_requires_grad(true);
  auto motion_params = p.motion.parameters();
  for (auto& [name, v] : motion_params) v.set_requires_grad(true);
  Adam<float> opt_e(motion_params, {.lr = tc.lr_encoder});
  Adam<float> opt_d(p.video_disc.params().entries(), {.lr = tc.lr_d});
  AdaController ada{0.0, tc.ada_target, tc.ada_adjust};
  double sign_acc = 0;
  std::size_t sign_count = 0;
  const ObjectiveOptions obj_opt{tc.lambda_l2, tc.lambda_reg, tc.use_recon, tc.first_frame_in_d};
  const std::size_t first_slot = tc.first_frame_in_d ? 0 : 1;

  auto draw = [&](std::size_t count) {
    std::vector<AugmentParams> a;
    if (!tc.ada_enabled) return a;
    for (std::size_t i = 0; i < count; ++i) a.push_back(draw_augment(ada.p, res, aug_gen));
    return a;
  };

  for (std::size_t step = 0; step < tc.steps; ++step) {
    FakeBatch<float> batch;
    {
      NoGradGuard ng;
      auto z = sample_z(gen, n, cfg.decoder.z_dim);
      batch.w0 = constant(p.decoder.map_latent(z, static_cast<float>(tc.truncation)).value());
    }
    for (std::size_t i = 0; i < n; ++i) {
      batch.seeds.push_back(gen.next_u64());
      const auto ts = sample_timestamps(tc.max_t, gen);
      batch.times.push_back({0.0, double(ts[1]), double(ts[2]), double(ts[3])});
    }

    // encoder step against a frozen discriminator
    p.video_disc.params().set_requires_grad(false);
    auto obj = encoder_objective(p.decoder, p.motion, p.video_disc, batch, obj_opt, draw(n));
    backward(obj.total);
    opt_e.step();
    p.video_disc.params().set_requires_grad(true);

    // discriminator step
    std::vector<std::array<double, 4>> real_times;
    std::vector<std::vector<Tensor<float>>> real_slots(4);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = sample_clip(data, gen, tc.max_t);
      real_times.push_back({0.0, double(c.timestamps[1]), double(c.timestamps[2]), double(c.timestamps[3])});
      for (std::size_t j = 0; j < 4; ++j) real_slots[j].push_back(std::move(c.frames[j]));
    }
    std::vector<Var<float>> real_clip, fake_clip;
    for (std::size_t j = first_slot; j < 4; ++j) real_clip.push_back(constant(stack_images(real_slots[j])));
    for (const auto& f : obj.clip) fake_clip.push_back(constant(f.value()));
    const auto real_deltas = clip_deltas<float>(real_times, tc.first_frame_in_d);
    const auto real_aug = draw(n);
    auto real_in = augment_clip(real_clip, real_aug);
    auto real_logits = p.video_disc(real_in, real_deltas);
    auto loss_d = discriminator_loss(real_logits, p.video_disc(augment_clip(fake_clip, draw(n)), obj.deltas));
    Var<float> total = reshape(loss_d, Shape{1});
    double r1v = 0;
    if (tc.r1_gamma > 0 && step % tc.r1_interval == 0) {
      std::vector<Var<float>> leaves;
      for (const auto& f : real_in) leaves.push_back(input_leaf(f));
      auto r1 = r1_penalty(p.video_disc(leaves, real_deltas), leaves, static_cast<float>(tc.r1_gamma));
      r1v = r1.item();
      total = add(total, scale(r1, static_cast<float>(tc.r1_interval)));
    }
    backward(total);
    opt_d.step();

    if (tc.ada_enabled) {
      sign_acc += sign_mean(real_logits);
      if (++sign_count == tc.ada_interval) {
        ada.update(sign_acc / static_cast<double>(sign_count));
        sign_acc = 0;
        sign_count = 0;
      }
    }

    const double lg = obj.loss_g.item(), rc = obj.recon.item(), rg = obj.reg.item(), ld = loss_d.item();
    require_finite(obj.total.item(), "encoder objective");
    require_finite(ld, "discriminator loss");
    log.record(step, {{"loss_d", ld}, {"loss_g", lg}, {"recon", rc}, {"reg", rg}, {"r1", r1v}, {"ada_p", ada.p}});
    if (on_step) on_step(step);
  }
  p.decoder.params().set_requires_grad(true);
}

template Var<float> discriminator_loss(const Var<float>&, const Var<float>&);
template Var<double> discriminator_loss(const Var<double>&, const Var<double>&);
template Var<float> generator_loss(const Var<float>&);
template Var<double> generator_loss(const Var<double>&);
template Var<float> recon_loss(const Var<float>&, const Var<float>&);
template Var<double> recon_loss(const Var<double>&, const Var<double>&);
template Var<float> latent_reg(const Var<float>&, std::size_t);
template Var<double> latent_reg(const Var<double>&, std::size_t);
template Tensor<float> clip_deltas(const std::vector<std::array<double, 4>>&, bool);
template Tensor<double> clip_deltas(const std::vector<std::array<double, 4>>&, bool);
template std::vector<Var<float>> augment_clip(const std::vector<Var<float>>&, const std::vector<AugmentParams>&);
template std::vector<Var<double>> augment_clip(const std::vector<Var<double>>&, const std::vector<AugmentParams>&);
template EncoderObjective<float> encoder_objective(const Decoder<float>&, const StyleInV<float>&,
                                                   const VideoDiscriminator<float>&, const FakeBatch<float>&,
                                                   const ObjectiveOptions&, const std::vector<AugmentParams>&);
template EncoderObjective<double> encoder_objective(const Decoder<double>&, const StyleInV<double>&,
                                                    const VideoDiscriminator<double>&, const FakeBatch<double>&,
                                                    const ObjectiveOptions&, const std::vector<AugmentParams>&);

}  // namespace styleinv
