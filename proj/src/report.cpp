#include "styleinv/report.hpp"

#include <cstdio>

#include "json.hpp"
#include "styleinv/evaluation.hpp"
#include "styleinv/training.hpp"

namespace styleinv {

std::vector<std::pair<std::string, double>> EvalReport::entries() const {
  return {{"fid", fid},
          {"fvd16", fvd16},
          {"fvd" + std::to_string(long_len), fvd_long},
          {"identity_drift", identity_drift},
          {"latent_jump", latent_jump},
          {"recon", recon}};
}

std::string EvalReport::text() const {
  std::string out;
  char buf[64];
  for (const auto& [k, v] : entries()) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out += k + "=" + buf + "\n";
  }
  return out;
}

std::string EvalReport::json() const {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : entries()) j[k] = v;
  return j.dump(2) + "\n";
}

std::uint64_t eval_video_seed(std::size_t i) { return rng::derive_seed(0x6576616c, i); }

EvalReport evaluate_model(const Pipeline& p, const SyntheticDataset& data, const EvalConfig& cfg,
                          const Decoder<float>* render) {
  const FeatureExtractor fx(cfg.feature_seed);
  const Decoder<float>& dec = render ? *render : p.decoder;
  const std::size_t len = cfg.num_frames;
  std::vector<double> times;
  for (std::size_t t = 0; t < len; ++t) times.push_back(static_cast<double>(t));

  std::vector<Clip> fake, real;
  std::vector<Tensor<float>> fake_frames, real_frames;
  EvalReport r;
  r.long_len = std::min<std::size_t>(128, len);
  for (std::size_t i = 0; i < cfg.num_clips; ++i) {
    const auto seed = eval_video_seed(i);
    const auto w0 = sample_w0(p.decoder, seed);
    auto v = generate_at(p, dec, seed, w0, times, true);
    r.latent_jump += latent_jump(v.latents) / static_cast<double>(cfg.num_clips);
    r.identity_drift += identity_drift(fx, v.frames) / static_cast<double>(cfg.num_clips);
    r.recon += first_frame_error(p.decoder, p.motion, w0, seed, seed) / static_cast<double>(cfg.num_clips);
    fake_frames.insert(fake_frames.end(), v.frames.begin(), v.frames.end());
    fake.push_back(std::move(v.frames));

    Clip c;
    const std::size_t video = i % data.size();
    for (std::size_t t = 0; t < len; ++t) c.push_back(data.frame(video, t));
    real_frames.insert(real_frames.end(), c.begin(), c.end());
    real.push_back(std::move(c));
  }
  r.fid = fid_proxy(fx, fake_frames, real_frames);
  r.fvd16 = fvd_proxy(fx, fake, real, 16);
  r.fvd_long = fvd_proxy(fx, fake, real, r.long_len);
  return r;
}

}  // namespace styleinv
