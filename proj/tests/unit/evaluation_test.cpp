#include <cmath>
#include <limits>

#include "doctest.h"
#include "styleinv/evaluation.hpp"
#include "styleinv/nn.hpp"
#include "styleinv/synthetic.hpp"

using namespace styleinv;

namespace {

GaussianStats stats(std::vector<double> mean, std::vector<double> cov) { return {std::move(mean), std::move(cov)}; }

std::vector<Tensor<float>> frames_of(const SyntheticDataset& d, std::size_t video, std::size_t count) {
  std::vector<Tensor<float>> out;
  for (std::size_t t = 0; t < count; ++t) out.push_back(d.frame(video, t));
  return out;
}

}  // namespace

TEST_CASE("Frechet distance closed forms") {
  const auto a = stats({1.0, -2.0}, {2.0, 0.3, 0.3, 1.0});
  CHECK(std::abs(frechet_distance(a, a)) <= 1e-9);
  const auto shifted = stats({4.0, 2.0}, a.cov);
  CHECK(frechet_distance(a, shifted) == doctest::Approx(9.0 + 16.0).epsilon(1e-9));
  // 1-D: (sqrt(s1) - sqrt(s2))^2
  CHECK(frechet_distance(stats({0.0}, {1.0}), stats({0.0}, {4.0})) == doctest::Approx(1.0).epsilon(1e-9));
  const auto b = stats({0.5, 0.0}, {1.0, -0.2, -0.2, 3.0});
  CHECK(frechet_distance(a, b) == doctest::Approx(frechet_distance(b, a)).epsilon(1e-9));
  CHECK(frechet_distance(a, b) >= 0.0);
  // diagonal covariances: sum of per-axis terms
  const auto d1 = stats({0, 0}, {1.0, 0, 0, 9.0}), d2 = stats({1, 0}, {4.0, 0, 0, 1.0});
  CHECK(frechet_distance(d1, d2) == doctest::Approx(1.0 + 1.0 + 4.0).epsilon(1e-9));
  CHECK_THROWS(frechet_distance(stats({std::numeric_limits<double>::quiet_NaN()}, {1.0}), stats({0.0}, {1.0})));
  CHECK_THROWS(frechet_distance(stats({0.0}, {1.0}), stats({0.0, 0.0}, {1, 0, 0, 1})));
}

TEST_CASE("Gaussian fit matches the sample moments") {
  const auto g = fit_gaussian({{1.0, 2.0}, {3.0, 2.0}, {2.0, 5.0}});
  CHECK(g.mean[0] == doctest::Approx(2.0));
  CHECK(g.mean[1] == doctest::Approx(3.0));
  // unbiased sample covariance
  CHECK(g.cov[0] == doctest::Approx(1.0));
  CHECK(g.cov[1] == doctest::Approx(0.0));
  CHECK(g.cov[3] == doctest::Approx(3.0));
  CHECK_THROWS(fit_gaussian({{1.0, 2.0}}));
}

TEST_CASE("FID proxy: zero on identical sets, positive under a shift") {
  FeatureExtractor fx;
  SyntheticDataset data(DatasetConfig{.num_videos = 4, .length = 20, .resolution = 16, .seed = 3});
  std::vector<Tensor<float>> a;
  for (std::size_t v = 0; v < 4; ++v)
    for (auto& f : frames_of(data, v, 20)) a.push_back(f);
  CHECK(std::abs(fid_proxy(fx, a, a)) <= 1e-6);
  auto b = a;
  for (auto& f : b)
    for (auto& x : f.vec()) x = std::min(1.0f, x + 0.4f);
  CHECK(fid_proxy(fx, a, b) > 0.0);

  // equals the Frechet distance of the fitted feature Gaussians
  std::vector<std::vector<double>> fa, fb;
  for (const auto& f : a) fa.push_back(fx.features_one(f));
  for (const auto& f : b) fb.push_back(fx.features_one(f));
  CHECK(fid_proxy(fx, a, b) == doctest::Approx(frechet_distance(fit_gaussian(fa), fit_gaussian(fb))).epsilon(1e-9));
  CHECK(fx.features_one(a[0]).size() == FeatureExtractor::kDim);
}

TEST_CASE("FVD proxy distinguishes temporal order and only reads the first clip_len frames") {
  FeatureExtractor fx;
  SyntheticDataset data(DatasetConfig{.num_videos = 6, .length = 24, .resolution = 16, .seed = 8});
  std::vector<Clip> clips;
  for (std::size_t v = 0; v < 6; ++v) clips.push_back(frames_of(data, v, 24));
  CHECK(std::abs(fvd_proxy(fx, clips, clips, 16)) <= 1e-6);

  auto shuffled = clips;
  for (auto& c : shuffled)
    for (std::size_t i = 0; i + 1 < 16; i += 2) std::swap(c[i], c[i + 1]);
  CHECK(fvd_proxy(fx, clips, shuffled, 16) > 0.0);

  auto tail = clips[0];
  for (auto& x : tail[16].vec()) x = 1.0f;
  CHECK(clip_feature(fx, tail, 16) == clip_feature(fx, clips[0], 16));
  auto inside = clips[0];
  for (auto& x : inside[15].vec()) x = 1.0f;
  CHECK(clip_feature(fx, inside, 16) != clip_feature(fx, clips[0], 16));
  CHECK(clip_feature(fx, clips[0], 16).size() == 2 * FeatureExtractor::kDim);
  CHECK_THROWS(clip_feature(fx, Clip(clips[0].begin(), clips[0].begin() + 8), 16));
}

TEST_CASE("identity drift and latent jump") {
  FeatureExtractor fx;
  SyntheticDataset data(DatasetConfig{.num_videos = 1, .length = 30, .resolution = 16, .seed = 2});
  Clip still(5, data.frame(0, 0));
  CHECK(identity_drift(fx, still) == 0.0);
  Clip moving = frames_of(data, 0, 30);
  CHECK(identity_drift(fx, moving) > 0.0);
  CHECK(identity_drift(fx, moving) == identity_drift(fx, moving));
  CHECK(FeatureExtractor(5).features_one(moving[3]) == FeatureExtractor(5).features_one(moving[3]));

  CHECK(latent_jump({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}) == 0.0);
  std::vector<std::vector<double>> line;
  for (int t = 0; t < 6; ++t) line.push_back({0.5 * t, -1.0 * t});
  CHECK(latent_jump(line) == doctest::Approx(1.0));
  // a first step four times the typical one
  std::vector<std::vector<double>> jump{{0.0}, {4.0}, {5.0}, {6.0}, {7.0}};
  CHECK(latent_jump(jump) == doctest::Approx(4.0));
}
