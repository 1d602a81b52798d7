#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "styleinv/image_io.hpp"
#include "styleinv/synthetic.hpp"

using namespace styleinv;

namespace {

double chi2_p_value(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

double choose(double n, int k) {
  double r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

VideoSpec still_disc() {
  VideoSpec s;
  s.resolution = 32;
  s.length = 10;
  s.size = 5.0;
  s.orbit_radius = 6.0;
  s.angular_velocity = 0.3;
  s.phase = 0.4;
  return s;
}

}  // namespace

TEST_CASE("timestamps start at zero and are strictly increasing") {
  rng::Generator gen(1, rng::Stream::sampling);
  for (int i = 0; i < 1000; ++i) {
    const auto ts = sample_timestamps(20, gen);
    CHECK(ts[0] == 0);
    CHECK(ts[1] < ts[2]);
    CHECK(ts[2] < ts[3]);
    CHECK(ts[1] >= 1);
    CHECK(ts[3] <= 20);
  }
  const auto tight = sample_timestamps(3, gen);
  CHECK(tight == std::array<std::size_t, 4>{0, 1, 2, 3});
  CHECK_THROWS_AS(sample_timestamps(2, gen), std::invalid_argument);
  CHECK_THROWS_AS(sample_timestamps(0, gen), std::invalid_argument);
}

TEST_CASE("timestamp triples are uniform over all subsets") {
  rng::Generator gen(2, rng::Stream::sampling);
  const std::size_t M = 8, draws = 100000;
  std::map<std::array<std::size_t, 4>, double> counts;
  std::vector<double> first(M + 1, 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto ts = sample_timestamps(M, gen);
    counts[ts] += 1;
    first[ts[1]] += 1;
  }
  const double subsets = choose(M, 3);
  REQUIRE(counts.size() == static_cast<std::size_t>(subsets));
  std::vector<double> obs, exp;
  for (const auto& [k, c] : counts) {
    obs.push_back(c);
    exp.push_back(static_cast<double>(draws) / subsets);
  }
  CHECK(chi2_p_value(obs, exp) > 0.01);

  // marginal of the smallest draw: P(t1 = k) = C(M-k, 2) / C(M, 3)
  obs.clear();
  exp.clear();
  for (std::size_t k = 1; k <= M - 2; ++k) {
    obs.push_back(first[k]);
    exp.push_back(static_cast<double>(draws) * choose(static_cast<double>(M - k), 2) / subsets);
  }
  CHECK(chi2_p_value(obs, exp) > 0.01);
}

TEST_CASE("class-aware sampling picks videos uniformly regardless of length") {
  ClassAwareSampler s{{10, 1000}};
  rng::Generator gen(3, rng::Stream::sampling);
  std::size_t short_hits = 0;
  const std::size_t draws = 20000;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto [v, t] = s.sample(gen);
    CHECK(t < s.lengths[v]);
    short_hits += v == 0;
  }
  CHECK(std::abs(static_cast<double>(short_hits) / draws - 0.5) <= 0.05);
  CHECK_THROWS_AS(ClassAwareSampler{}.sample(gen), std::invalid_argument);
}

TEST_CASE("rendering is deterministic and static without motion") {
  auto s = still_disc();
  CHECK(render_frame(s, 3) == render_frame(s, 3));
  CHECK(render_frame(s, 3) != render_frame(s, 4));
  s.angular_velocity = 0;
  s.spin = 0;
  for (std::size_t t = 1; t < s.length; ++t) CHECK(render_frame(s, t) == render_frame(s, 0));
  CHECK_THROWS_AS(render_frame(s, s.length), std::out_of_range);
}

TEST_CASE("the object centroid follows the circular orbit") {
  const auto s = still_disc();
  for (std::size_t t = 0; t < s.length; ++t) {
    const auto c = s.center(static_cast<double>(t));
    const double a = s.angular_velocity * static_cast<double>(t) + s.phase;
    CHECK(c[0] == doctest::Approx(16.0 + 6.0 * std::cos(a)));
    CHECK(c[1] == doctest::Approx(16.0 + 6.0 * std::sin(a)));
    const auto img = render_frame(s, t);
    double m = 0, mx = 0, my = 0;
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x) {
        const double cover = (img[y * 32 + x] - s.background) / (s.color[0] - s.background);
        m += cover;
        mx += cover * (static_cast<double>(x) + 0.5);
        my += cover * (static_cast<double>(y) + 0.5);
      }
    CHECK(std::hypot(mx / m - c[0], my / m - c[1]) <= 0.5);
  }
}

TEST_CASE("a video keeps its shape colour in every frame") {
  SyntheticDataset data(DatasetConfig{.num_videos = 6, .length = 12, .resolution = 32, .seed = 4});
  for (std::size_t v = 0; v < data.size(); ++v) {
    const auto& s = data.spec(v);
    for (std::size_t t = 0; t < s.length; ++t) {
      const auto img = data.frame(v, t);
      bool full_pixel = false;
      for (std::size_t i = 0; i < 32 * 32 && !full_pixel; ++i)
        full_pixel = img[i] == static_cast<float>(s.color[0]) && img[1024 + i] == static_cast<float>(s.color[1]) &&
                     img[2048 + i] == static_cast<float>(s.color[2]);
      CHECK(full_pixel);
    }
  }
}

TEST_CASE("datasets are reproducible from their seed") {
  const DatasetConfig cfg{.num_videos = 5, .length = 8, .resolution = 16, .seed = 9};
  SyntheticDataset a(cfg), b(cfg);
  auto other = cfg;
  other.seed = 10;
  SyntheticDataset c(other);
  bool any_diff = false;
  for (std::size_t v = 0; v < 5; ++v) {
    CHECK(a.frame(v, 5) == b.frame(v, 5));
    any_diff = any_diff || a.frame(v, 5) != c.frame(v, 5);
  }
  CHECK(any_diff);
  auto remap = cfg;
  remap.remap_colors = true;
  SyntheticDataset r(remap);
  CHECK(r.spec(2).color[0] == a.spec(2).color[2]);
  CHECK(r.spec(2).center(3.0) == a.spec(2).center(3.0));
  CHECK_THROWS_AS(SyntheticDataset(DatasetConfig{.num_videos = 0}), std::invalid_argument);
}

TEST_CASE("sampled clips carry consistent frames and gaps") {
  SyntheticDataset data(DatasetConfig{.num_videos = 2, .length = 16, .resolution = 16, .seed = 5});
  rng::Generator gen(6, rng::Stream::dataset);
  std::size_t first_video = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto c = sample_clip(data, gen, 15);
    CHECK(c.timestamps[0] == 0);
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(c.deltas[k] == static_cast<double>(c.timestamps[k + 1] - c.timestamps[k]));
    if (i < 20)
      for (std::size_t k = 0; k < 4; ++k) CHECK(c.frames[k] == data.frame(c.video, c.timestamps[k]));
    first_video += c.video == 0;
  }
  CHECK(std::abs(first_video / 2000.0 - 0.5) <= 0.05);
  CHECK_THROWS_AS(sample_clip(data, gen, 16), std::invalid_argument);
}

TEST_CASE("exported frames read back within quantisation error") {
  SyntheticDataset data(DatasetConfig{.num_videos = 1, .length = 3, .resolution = 16, .seed = 7});
  const auto dir = std::filesystem::temp_directory_path() / "styleinv_export_test";
  std::filesystem::remove_all(dir);
  data.export_video(0, dir.string());
  for (std::size_t t = 0; t < 3; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.png", t);
    const auto back = read_png((dir / name).string());
    const auto ref = data.frame(0, t);
    REQUIRE(back.shape() == ref.shape());
    double worst = 0;
    for (std::size_t i = 0; i < ref.numel(); ++i) worst = std::max(worst, std::abs(double(back[i]) - ref[i]));
    CHECK(worst <= 1.0 / 255.0 + 1e-6);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "frame_000003.png"));
  std::filesystem::remove_all(dir);
  CHECK(stack_images({data.frame(0, 0), data.frame(0, 1)}).shape() == Shape{2, 3, 16, 16});
}
