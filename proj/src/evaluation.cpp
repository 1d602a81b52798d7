#include "styleinv/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "styleinv/errors.hpp"

namespace styleinv {

GaussianStats fit_gaussian(const std::vector<std::vector<double>>& features) {
  if (features.size() < 2) throw std::invalid_argument("Gaussian fit needs at least two samples");
  const std::size_t d = features[0].size(), n = features.size();
  GaussianStats g;
  g.mean.assign(d, 0.0);
  for (const auto& f : features) {
    if (f.size() != d) throw ShapeError("feature rows differ in length");
    for (std::size_t i = 0; i < d; ++i) g.mean[i] += f[i];
  }
  for (auto& m : g.mean) m /= static_cast<double>(n);
  g.cov.assign(d * d, 0.0);
  for (const auto& f : features)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) g.cov[i * d + j] += (f[i] - g.mean[i]) * (f[j] - g.mean[j]);
  for (auto& c : g.cov) c /= static_cast<double>(n - 1);
  return g;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  const std::size_t d = a.dim();
  if (b.dim() != d || a.cov.size() != d * d || b.cov.size() != d * d) throw ShapeError("Gaussian dimensions differ");
  for (double v : a.mean) if (!std::isfinite(v)) throw NumericError("non-finite mean in Frechet distance");
  for (double v : b.mean) if (!std::isfinite(v)) throw NumericError("non-finite mean in Frechet distance");
  for (double v : a.cov) if (!std::isfinite(v)) throw NumericError("non-finite covariance in Frechet distance");
  for (double v : b.cov) if (!std::isfinite(v)) throw NumericError("non-finite covariance in Frechet distance");
  using Mat = Eigen::MatrixXd;
  const Eigen::Index n = static_cast<Eigen::Index>(d);
  Mat s1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.cov.data(), n, n);
  Mat s2 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(b.cov.data(), n, n);
  s1 = 0.5 * (s1 + s1.transpose());
  s2 = 0.5 * (s2 + s2.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> e1(s1);
  const Eigen::VectorXd l1 = e1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat root1 = e1.eigenvectors() * l1.asDiagonal() * e1.eigenvectors().transpose();
  Mat inner = root1 * s2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> e2(inner, Eigen::EigenvaluesOnly);
  const double tr_sqrt = e2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
  const double value = mean_term + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, value);
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed, std::size_t in_channels) {
  Initializer init(rng::derive_seed(seed, static_cast<std::uint64_t>(rng::Stream::evaluation)));
  const std::size_t widths[] = {16, 32, 32};
  std::size_t in = in_channels;
  for (std::size_t i = 0; i < 3; ++i) {
    convs_.emplace_back(params_, "fx.conv" + std::to_string(i), in, widths[i], 3, 2, init);
    in = widths[i];
  }
  projection_ = params_.add("fx.proj", init.normal<float>(Shape{in * 4, kDim}, 1.0 / std::sqrt(double(in * 4))));
}

std::vector<std::vector<double>> FeatureExtractor::features(const Tensor<float>& frames) const {
  NoGradGuard guard;
  Var<float> h = constant(frames);
  for (const auto& c : convs_) h = lrelu_gain(c(h));
  const auto& s = h.shape();
  const std::size_t n = s[0], ch = s[1], hh = s[2], ww = s[3];
  // average over a 2x2 grid of regions (regions overlap when the map is 1 wide)
  Tensor<float> pooled(Shape{n, ch * 4});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t gy = 0; gy < 2; ++gy)
        for (std::size_t gx = 0; gx < 2; ++gx) {
          const std::size_t y0 = gy * hh / 2, y1 = std::max(y0 + 1, (gy + 1) * hh / 2);
          const std::size_t x0 = gx * ww / 2, x1 = std::max(x0 + 1, (gx + 1) * ww / 2);
          double acc = 0;
          for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t x = x0; x < x1; ++x) acc += h.value()[((i * ch + c) * hh + y) * ww + x];
          pooled[i * ch * 4 + c * 4 + gy * 2 + gx] = static_cast<float>(acc / double((y1 - y0) * (x1 - x0)));
        }
  auto f = matmul(constant(std::move(pooled)), projection_);
  std::vector<std::vector<double>> out(n, std::vector<double>(kDim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kDim; ++j) out[i][j] = f.value()[i * kDim + j];
  return out;
}

std::vector<double> FeatureExtractor::features_one(const Tensor<float>& frame) const {
  auto dims = frame.shape().dims();
  dims.insert(dims.begin(), 1);
  return features(frame.reshaped(Shape(dims)))[0];
}

namespace {

std::vector<std::vector<double>> frame_features(const FeatureExtractor& fx, const std::vector<Tensor<float>>& frames) {
  std::vector<std::vector<double>> out;
  constexpr std::size_t chunk = 32;
  for (std::size_t i = 0; i < frames.size(); i += chunk) {
    std::vector<Tensor<float>> part(frames.begin() + static_cast<std::ptrdiff_t>(i),
                                    frames.begin() + static_cast<std::ptrdiff_t>(std::min(frames.size(), i + chunk)));
    std::vector<std::size_t> dims{part.size()};
    for (auto d : part[0].shape().dims()) dims.push_back(d);
    Tensor<float> batch{Shape(dims)};
    std::size_t off = 0;
    for (const auto& p : part) {
      std::copy(p.vec().begin(), p.vec().end(), batch.vec().begin() + static_cast<std::ptrdiff_t>(off));
      off += p.numel();
    }
    for (auto& f : fx.features(batch)) out.push_back(std::move(f));
  }
  return out;
}

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double fid_proxy(const FeatureExtractor& fx, const std::vector<Tensor<float>>& a, const std::vector<Tensor<float>>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("fid_proxy needs at least two frames per set");
  return frechet_distance(fit_gaussian(frame_features(fx, a)), fit_gaussian(frame_features(fx, b)));
}

std::vector<double> clip_feature(const FeatureExtractor& fx, const Clip& clip, std::size_t clip_len) {
  if (clip_len < 2 || clip.size() < clip_len)
    throw std::invalid_argument("clip has " + std::to_string(clip.size()) + " frames, need " + std::to_string(clip_len));
  const auto f = frame_features(fx, Clip(clip.begin(), clip.begin() + static_cast<std::ptrdiff_t>(clip_len)));
  const std::size_t d = FeatureExtractor::kDim;
  std::vector<double> out(2 * d, 0.0);
  for (std::size_t t = 0; t < clip_len; ++t)
    for (std::size_t j = 0; j < d; ++j) out[j] += f[t][j] / static_cast<double>(clip_len);
  for (std::size_t t = 0; t + 1 < clip_len; ++t)
    for (std::size_t j = 0; j < d; ++j) out[d + j] += (f[t + 1][j] - f[t][j]) / static_cast<double>(clip_len - 1);
  return out;
}

double fvd_proxy(const FeatureExtractor& fx, const std::vector<Clip>& a, const std::vector<Clip>& b, std::size_t clip_len) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("fvd_proxy needs at least two clips per set");
  std::vector<std::vector<double>> fa, fb;
  for (const auto& c : a) fa.push_back(clip_feature(fx, c, clip_len));
  for (const auto& c : b) fb.push_back(clip_feature(fx, c, clip_len));
  return frechet_distance(fit_gaussian(fa), fit_gaussian(fb));
}

double identity_drift(const FeatureExtractor& fx, const Clip& clip) {
  if (clip.size() < 2) throw std::invalid_argument("identity_drift needs at least two frames");
  return l2(fx.features_one(clip.front()), fx.features_one(clip.back()));
}

double latent_jump(const std::vector<std::vector<double>>& latents) {
  if (latents.size() < 2) throw std::invalid_argument("latent_jump needs at least two latents");
  std::vector<double> steps;
  for (std::size_t t = 0; t + 1 < latents.size(); ++t) steps.push_back(l2(latents[t + 1], latents[t]));
  const double first = steps[0];
  std::vector<double> sorted = steps;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  if (median == 0.0) return first == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return first / median;
}

}  // namespace styleinv
