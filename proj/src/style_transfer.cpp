#include "styleinv/style_transfer.hpp"

#include "styleinv/errors.hpp"
#include "styleinv/optim.hpp"

namespace styleinv {

namespace {

// 1 - cosine similarity per row, averaged.
Var<float> cosine_distance(const Var<float>& a, const Var<float>& b) {
  const auto& s = a.shape();
  const Shape row{s[0], 1};
  auto dot = sum_to(mul(a, b), row);
  auto na = rsqrt(sum_to(square(a), row), 1e-8f);
  auto nb = rsqrt(sum_to(square(b), row), 1e-8f);
  return add_scalar(neg(mean(mul(dot, mul(na, nb)))), 1.0f);
}

}  // namespace

std::unique_ptr<Decoder<float>> finetune_decoder(const Decoder<float>& parent, const ConvEncoder<float>& feature_net,
                                                 const ImageDiscriminator<float>& disc_init,
                                                 const std::vector<Tensor<float>>& targets, const TransferConfig& cfg,
                                                 std::uint64_t seed, MetricsLog& log) {
  const auto& dc = parent.config();
  if (targets.empty()) throw ConfigError("style transfer needs at least one target image");
  const Shape want{dc.img_channels, dc.img_resolution, dc.img_resolution};
  for (const auto& t : targets)
    if (t.shape() != want)
      throw ShapeError("target image " + t.shape().str() + " does not match decoder output " + want.str());

  auto child = clone_decoder(parent);
  const auto frozen = child->freeze_tier(cfg.freeze_resolution);
  child->params().set_requires_grad(true);
  child->params().set_requires_grad(frozen, false);
  if (cfg.steps == 0) return child;

  ImageDiscriminator<float> disc(disc_init.config(), 0);
  disc.params().copy_values_from(disc_init.params());
  disc.params().set_requires_grad(true);
  std::vector<std::pair<std::string, Var<float>>> trainable;
  for (const auto& e : child->params().entries())
    if (!frozen.contains(e.first)) trainable.push_back(e);
  Adam<float> opt_g(trainable, {.lr = cfg.lr});
  Adam<float> opt_d(disc.params().entries(), {.lr = cfg.lr_d});

  rng::Generator gen(rng::derive_seed(seed, 0x7374796c), rng::Stream::sampling);
  const bool noisy = dc.noise_mode != NoiseMode::off;
  const std::size_t n = cfg.batch;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Tensor<float> zt(Shape{n, dc.z_dim});
    for (auto& v : zt.vec()) v = static_cast<float>(gen.normal());
    std::vector<NoiseRealization<float>> noise;
    if (noisy)
      for (std::size_t i = 0; i < n; ++i) noise.push_back(parent.sample_video_noise(gen.next_u64()));
    std::vector<Tensor<float>> reals;
    for (std::size_t i = 0; i < n; ++i) reals.push_back(targets[gen.below(targets.size())]);
    auto real = constant(stack_images(reals));

    Var<float> w, parent_img, parent_feat, parent_id;
    {
      NoGradGuard ng;
      w = constant(parent.map_latent(constant(std::move(zt))).value());
      parent_img = parent.synthesize(w, noisy ? &noise : nullptr);
      parent_feat = constant(feature_net.features(parent_img).value());
      parent_id = constant(feature_net.project(parent_feat).value());
    }

    // child step
    disc.params().set_requires_grad(false);
    auto img = child->synthesize(w, noisy ? &noise : nullptr);
    auto adv = generator_loss(disc(img));
    auto feat = feature_net.features(img);
    auto perceptual = recon_loss(feat, parent_feat);
    auto identity = cosine_distance(feature_net.project(feat), parent_id);
    auto total = add(add(reshape(adv, Shape{1}), scale(reshape(perceptual, Shape{1}), static_cast<float>(cfg.lambda_perceptual))),
                     scale(reshape(identity, Shape{1}), static_cast<float>(cfg.lambda_identity)));
    backward(total);
    opt_g.step();
    // the fixed feature net is not optimised; drop anything it collected
    for (auto e : feature_net.params().entries()) e.second.zero_grad();
    disc.params().set_requires_grad(true);

    // discriminator step
    auto fake = constant(img.value());
    auto loss_d = discriminator_loss(disc(real), disc(fake));
    Var<float> dtotal = reshape(loss_d, Shape{1});
    double r1v = 0;
    if (cfg.r1_gamma > 0 && step % cfg.r1_interval == 0) {
      Var<float> leaf(real.value(), true);
      auto r1 = r1_penalty(disc(leaf), {leaf}, static_cast<float>(cfg.r1_gamma));
      r1v = r1.item();
      dtotal = add(dtotal, scale(r1, static_cast<float>(cfg.r1_interval)));
    }
    backward(dtotal);
    opt_d.step();

    require_finite(total.item(), "style transfer objective");
    require_finite(loss_d.item(), "style transfer discriminator loss");
    log.record(step, {{"loss_d", loss_d.item()},
                      {"loss_g", adv.item()},
                      {"perceptual", perceptual.item()},
                      {"identity", identity.item()},
                      {"r1", r1v}});
  }
  child->params().set_requires_grad(true);
  return child;
}

std::vector<Tensor<float>> transfer_video(const Decoder<float>& decoder, const std::vector<std::vector<double>>& latents,
                                          std::uint64_t video_seed, const std::vector<double>& times) {
  return render_latents(decoder, latents, video_seed, times);
}

}  // namespace styleinv
