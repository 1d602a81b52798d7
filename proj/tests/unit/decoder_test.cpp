#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "styleinv/decoder.hpp"
#include "styleinv/errors.hpp"
#include "styleinv/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/philox_oracle.hpp"
#include "support/tiny.hpp"

using namespace styleinv;
using testing::randomize;
using testing::random_input;

namespace {

double lrelu_gain_ref(double x) { return std::sqrt(2.0) * (x >= 0 ? x : 0.2 * x); }

// Independent evaluation of the mapping network from raw parameter values.
std::vector<double> mapping_oracle(const Decoder<double>& d, const std::vector<double>& z) {
  const auto& c = d.config();
  double ms = 0;
  for (double v : z) ms += v * v;
  ms /= static_cast<double>(z.size());
  std::vector<double> h(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) h[i] = z[i] / std::sqrt(ms + 1e-8);
  for (std::size_t l = 0; l < c.mapping_layers; ++l) {
    const auto& w = d.params().at("mapping.fc" + std::to_string(l) + ".weight").value();
    const auto& b = d.params().at("mapping.fc" + std::to_string(l) + ".bias").value();
    const std::size_t in = h.size();
    const double wg = c.mapping_lr_mul / std::sqrt(static_cast<double>(in));
    std::vector<double> out(c.w_dim);
    for (std::size_t o = 0; o < c.w_dim; ++o) {
      double acc = b[o] * c.mapping_lr_mul;
      for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * wg * h[i];
      out[o] = lrelu_gain_ref(acc);
    }
    h = out;
  }
  return h;
}

std::set<std::string> names_of(const Decoder<float>& d, std::initializer_list<const char*> prefixes) {
  std::set<std::string> out;
  for (const auto* p : prefixes)
    for (const auto& n : d.params().names_with_prefix(p)) out.insert(n);
  return out;
}

}  // namespace

TEST_CASE("mapping network matches an independent evaluation") {
  Decoder<double> d(testing::tiny_decoder(), 3);
  randomize(d.params(), 11);
  auto z = random_input<double>({2, 4}, 5);
  auto w = d.map_latent(z);
  for (std::size_t n = 0; n < 2; ++n) {
    std::vector<double> zr(z.value().vec().begin() + n * 4, z.value().vec().begin() + (n + 1) * 4);
    auto ref = mapping_oracle(d, zr);
    for (std::size_t j = 0; j < 4; ++j) CHECK(w.value()[n * 4 + j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
  double diff = 0;
  for (std::size_t j = 0; j < 4; ++j) diff += std::abs(w.value()[j] - w.value()[4 + j]);
  CHECK(diff > 0);
}

TEST_CASE("mapping is deterministic and truncation 0 returns the mean latent") {
  Decoder<float> d(testing::tiny_decoder(), 3);
  auto z0 = constant(Tensor<float>(Shape{1, 4}));
  CHECK(d.map_latent(z0).value() == d.map_latent(z0).value());
  d.set_mean_latent(Tensor<float>(Shape{4}, {0.5f, -1.f, 2.f, 0.25f}), 1);
  auto z = random_input<float>({3, 4}, 9);
  auto w = d.map_latent(z, 0.0f);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t j = 0; j < 4; ++j) CHECK(w.value()[n * 4 + j] == d.mean_latent()[j]);
  auto half = d.map_latent(z, 0.5f), full = d.map_latent(z);
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(half.value()[i] == doctest::Approx(0.5f * (full.value()[i] + d.mean_latent()[i % 4])).epsilon(1e-5));
  CHECK_THROWS_AS(d.map_latent(z, 1.5f), ConfigError);
  CHECK_THROWS_AS(d.map_latent(random_input<float>({1, 3}, 1)), ShapeError);
}

TEST_CASE("running mean latent equals the arithmetic mean of observed outputs") {
  Decoder<double> d(testing::tiny_decoder(), 4);
  std::vector<double> acc(4, 0.0);
  std::size_t n = 0;
  for (int call = 0; call < 7; ++call) {
    auto w = d.map_latent_statistics(random_input<double>({3, 4}, 100 + call));
    for (std::size_t i = 0; i < 3; ++i, ++n)
      for (std::size_t j = 0; j < 4; ++j) acc[j] += w.value()[i * 4 + j];
  }
  CHECK(d.mean_latent_count() == 21);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(d.mean_latent()[j] - acc[j] / static_cast<double>(n)) <= 1e-6);
  d.reset_mean_latent();
  CHECK(d.mean_latent_count() == 0);
  CHECK_THROWS_AS(d.set_mean_latent(Tensor<double>(Shape{3}), 1), ShapeError);
}

TEST_CASE("synthesis is deterministic and respects the noise mode") {
  Decoder<float> d(testing::tiny_decoder(), 5);
  randomize(d.params(), 6, 0.3);
  auto w = random_input<float>({2, 4}, 7);
  std::vector<NoiseRealization<float>> noise{d.sample_video_noise(1), d.sample_video_noise(2)};
  auto a = d.synthesize(w, &noise);
  CHECK(a.shape() == Shape{2, 2, 8, 8});
  CHECK(a.value() == d.synthesize(w, &noise).value());
  CHECK_THROWS_AS(d.synthesize(w, nullptr), ConfigError);
  std::vector<NoiseRealization<float>> one{noise[0]};
  CHECK_THROWS_AS(d.synthesize(w, &one), ShapeError);

  Decoder<float> off(testing::tiny_decoder(NoiseMode::off), 5);
  randomize(off.params(), 6, 0.3);
  auto b = off.synthesize(w, nullptr);
  CHECK(b.value() == off.synthesize(w, &noise).value());
  std::vector<NoiseRealization<float>> other{d.sample_video_noise(8), d.sample_video_noise(9)};
  CHECK(b.value() == off.synthesize(w, &other).value());
}

TEST_CASE("synthesis with zeroed weights reduces to the bias closed form") {
  Decoder<double> d(testing::tiny_decoder(NoiseMode::off), 8);
  randomize(d.params(), 12);
  for (const char* p : {"synthesis.b4.conv.weight", "synthesis.b8.conv.weight", "synthesis.b4.affine.weight",
                        "synthesis.b8.affine.weight"})
    d.params().at(p).mutable_value().fill(0.0);
  auto out = d.synthesize(random_input<double>({1, 4}, 2), nullptr);

  const auto& P = d.params();
  auto block = [&](const std::string& b) {
    std::vector<double> a(3);
    const auto& cb = P.at(b + ".conv.bias").value();
    const auto& ab = P.at(b + ".affine.bias").value();
    for (std::size_t c = 0; c < 3; ++c) a[c] = lrelu_gain_ref(cb[c] * (1.0 + ab[c]) + ab[3 + c]);
    return a;
  };
  const auto a = block("synthesis.b8");
  const auto& rw = P.at("synthesis.b8.torgb.weight").value();
  const auto& rb = P.at("synthesis.b8.torgb.bias").value();
  const double g = 1.0 / std::sqrt(3.0);
  for (std::size_t k = 0; k < 2; ++k) {
    double v = rb[k];
    for (std::size_t c = 0; c < 3; ++c) v += rw[k * 3 + c] * g * a[c];
    for (std::size_t px = 0; px < 64; ++px) CHECK(out.value()[k * 64 + px] == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("video noise comes from the video-noise stream, one block per site") {
  Decoder<float> d(testing::tiny_decoder(), 0);
  auto n7 = d.sample_video_noise(7);
  REQUIRE(n7.maps.size() == 2);
  CHECK(n7.maps[0].shape() == Shape{1, 1, 4, 4});
  CHECK(n7.maps[1].shape() == Shape{1, 1, 8, 8});
  const auto ref = testing::PhiloxOracle::normals(7, 2, 0, 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(n7.maps[0][i] == static_cast<float>(ref[i]));
  const auto ref8 = testing::PhiloxOracle::normals(7, 2, 1, 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(n7.maps[1][i] == static_cast<float>(ref8[i]));
  CHECK(d.sample_video_noise(7).maps[1] == n7.maps[1]);
  CHECK(d.sample_video_noise(1).maps[0] != d.sample_video_noise(2).maps[0]);
}

TEST_CASE("frame noise seed is per video unless the mode is random") {
  Decoder<float> constant_mode(testing::tiny_decoder(), 0);
  CHECK(constant_mode.frame_noise_seed(42, 0.0) == 42);
  CHECK(constant_mode.frame_noise_seed(42, 17.5) == 42);
  Decoder<float> random_mode(testing::tiny_decoder(NoiseMode::random), 0);
  CHECK(random_mode.frame_noise_seed(42, 1.0) != random_mode.frame_noise_seed(42, 2.0));
  CHECK(random_mode.frame_noise_seed(42, 0.0) == random_mode.frame_noise_seed(42, -0.0));
  CHECK(random_mode.frame_noise_seed(42, 3.0) == random_mode.frame_noise_seed(42, 3.0));
}

TEST_CASE("freeze tiers on a 64x64 decoder") {
  Decoder<float> d(DecoderConfig{}, 0);
  CHECK(d.freeze_tier(16) == names_of(d, {"mapping.", "synthesis.b4.", "synthesis.b8.", "synthesis.b16."}));
  CHECK(d.freeze_tier(4) == names_of(d, {"mapping.", "synthesis.b4."}));
  CHECK_THROWS_AS(d.freeze_tier(64), ConfigError);
  CHECK_THROWS_AS(d.freeze_tier(128), ConfigError);
  CHECK_THROWS_AS(d.freeze_tier(12), ConfigError);
  CHECK_THROWS_AS(d.freeze_tier(2), ConfigError);

  // frozen and trainable partition the parameter set, with every trainable
  // tensor above the tier
  for (std::size_t r : {4, 8, 16, 32}) {
    const auto frozen = d.freeze_tier(r);
    std::size_t trainable = 0;
    for (const auto& name : d.params().names()) {
      if (frozen.contains(name)) continue;
      ++trainable;
      REQUIRE(name.rfind("synthesis.b", 0) == 0);
      CHECK(std::stoul(name.substr(11)) > r);
    }
    CHECK(trainable > 0);
    CHECK(frozen.size() + trainable == d.params().size());
  }
}

TEST_CASE("decoder configuration is validated") {
  auto c = testing::tiny_decoder();
  c.img_resolution = 12;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = testing::tiny_decoder();
  c.channels = {3};
  CHECK_THROWS_AS(Decoder<float>(c, 0), ConfigError);
  c = testing::tiny_decoder();
  c.mapping_lr_mul = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(noise_mode_from_string(to_string(NoiseMode::random)) == NoiseMode::random);
  CHECK_THROWS_AS(noise_mode_from_string("sometimes"), ConfigError);
}

TEST_CASE("decoder gradients match finite differences") {
  DecoderConfig c = testing::tiny_decoder();
  c.z_dim = c.w_dim = 8;
  c.channels = {8, 8};
  Decoder<double> d(c, 1);
  randomize(d.params(), 21, 0.4);
  auto z = random_input<double>({2, 8}, 3);
  std::vector<NoiseRealization<double>> noise{d.sample_video_noise(4), d.sample_video_noise(5)};
  Initializer init(77);
  auto weights = constant(init.normal<double>(Shape{2, 2, 8, 8}, 1.0));
  auto f = [&] { return mean(mul(d.synthesize(d.map_latent(z), &noise), weights)); };
  const auto report = testing::check_gradients(f, d.params().entries());
  INFO(report.worst);
  CHECK(report.max_rel_error <= 1e-4);
}
