#include <cmath>
#include <functional>

#include "doctest.h"
#include "styleinv/nn.hpp"
#include "styleinv/ops.hpp"
#include "support/gradcheck.hpp"

using namespace styleinv;
using testing::check_gradients;

namespace {

Var<double> random_leaf(Shape s, std::uint64_t seed) {
  Initializer init(seed);
  return Var<double>::parameter(init.normal<double>(std::move(s), 1.0));
}

Tensor<double> random_tensor(Shape s, std::uint64_t seed) {
  Initializer init(seed);
  return init.normal<double>(std::move(s), 1.0);
}

// Weighted sum with fixed random weights so every output component matters.
Var<double> probe(const Var<double>& y, std::uint64_t seed) {
  return sum(mul(y, constant(random_tensor(y.shape(), seed))));
}

void expect_grad_ok(const std::function<Var<double>()>& f, std::vector<std::pair<std::string, Var<double>>> leaves,
                    double tol = 1e-6) {
  const auto report = check_gradients(f, std::move(leaves));
  INFO(report.worst);
  CHECK(report.max_rel_error <= tol);
  CHECK(report.checked > 0);
}

}  // namespace

TEST_CASE("elementwise ops have correct gradients") {
  auto a = random_leaf({2, 3}, 1), b = random_leaf({2, 3}, 2);
  expect_grad_ok([&] { return probe(add(mul(a, b), sub(a, scale(b, 0.3))), 9); }, {{"a", a}, {"b", b}});
  expect_grad_ok([&] { return probe(sigmoid(a), 9); }, {{"a", a}});
  expect_grad_ok([&] { return probe(softplus(scale(a, 3.0)), 9); }, {{"a", a}});
  expect_grad_ok([&] { return probe(rsqrt(square(a), 0.5), 9); }, {{"a", a}});
  expect_grad_ok([&] { return probe(leaky_relu(a, 0.2), 9); }, {{"a", a}});
  expect_grad_ok([&] { return probe(add_scalar(neg(a), 2.0), 9); }, {{"a", a}});
  expect_grad_ok([&] { return mean(square(a)); }, {{"a", a}});
}

TEST_CASE("shape ops have correct gradients") {
  auto a = random_leaf({2, 1, 3}, 3), c = random_leaf({2, 4, 3}, 4);
  expect_grad_ok([&] { return probe(expand(a, Shape{2, 4, 3}), 7); }, {{"a", a}});
  expect_grad_ok([&] { return probe(sum_to(c, Shape{1, 4, 1}), 7); }, {{"c", c}});
  expect_grad_ok([&] { return probe(concat<double>({a, c, a}, 1), 7); }, {{"a", a}, {"c", c}});
  expect_grad_ok([&] { return probe(slice(c, 1, 1, 2), 7); }, {{"c", c}});
  expect_grad_ok([&] { return probe(pad_slice(a, 2, 1, 5), 7); }, {{"a", a}});
  expect_grad_ok([&] { return probe(reshape(c, Shape{8, 3}), 7); }, {{"c", c}});
}

TEST_CASE("matmul gradients for every transpose combination") {
  auto a = random_leaf({3, 4}, 5), at = random_leaf({4, 3}, 6), b = random_leaf({4, 2}, 7), bt = random_leaf({2, 4}, 8);
  expect_grad_ok([&] { return probe(matmul(a, b), 1); }, {{"a", a}, {"b", b}});
  expect_grad_ok([&] { return probe(matmul(a, bt, false, true), 1); }, {{"a", a}, {"bt", bt}});
  expect_grad_ok([&] { return probe(matmul(at, b, true, false), 1); }, {{"at", at}, {"b", b}});
  expect_grad_ok([&] { return probe(matmul(at, bt, true, true), 1); }, {{"at", at}, {"bt", bt}});
}

TEST_CASE("convolution family gradients") {
  auto x = random_leaf({2, 3, 6, 5}, 10), w = random_leaf({4, 3, 3, 3}, 11), w1 = random_leaf({4, 3, 1, 1}, 12);
  for (ConvGeometry g : {ConvGeometry{1, 1, 1}, ConvGeometry{2, 1, 1}, ConvGeometry{1, 0, 0}, ConvGeometry{2, 0, 1}}) {
    expect_grad_ok([&] { return probe(conv2d(x, w, g), 2); }, {{"x", x}, {"w", w}});
  }
  expect_grad_ok([&] { return probe(conv2d(x, w1, ConvGeometry{}), 2); }, {{"x", x}, {"w1", w1}});
  // the adjoint ops are themselves differentiable
  auto gy = random_leaf({2, 4, 3, 3}, 13);
  const ConvGeometry s2{2, 1, 1};
  expect_grad_ok([&] { return probe(conv2d_input_grad(gy, w, s2, 6, 5), 3); }, {{"gy", gy}, {"w", w}});
  expect_grad_ok([&] { return probe(conv2d_weight_grad(x, gy, s2, 3, 3), 3); }, {{"x", x}, {"gy", gy}});
}

TEST_CASE("conv2d adjoint identities hold numerically") {
  auto x = random_leaf({1, 2, 5, 5}, 20), w = random_leaf({3, 2, 3, 3}, 21), g = random_leaf({1, 3, 3, 3}, 22);
  const ConvGeometry geom{2, 1, 1};
  const double lhs = sum(mul(conv2d(x, w, geom), g)).item();
  const double via_x = sum(mul(x, conv2d_input_grad(g, w, geom, 5, 5))).item();
  const double via_w = sum(mul(w, conv2d_weight_grad(x, g, geom, 3, 3))).item();
  CHECK(lhs == doctest::Approx(via_x).epsilon(1e-12));
  CHECK(lhs == doctest::Approx(via_w).epsilon(1e-12));
}

TEST_CASE("resampling and remap gradients") {
  auto x = random_leaf({2, 2, 3, 4}, 30), y = random_leaf({1, 2, 4, 6}, 31);
  expect_grad_ok([&] { return probe(upsample2x(x), 4); }, {{"x", x}});
  expect_grad_ok([&] { return probe(sumpool2x(y), 4); }, {{"y", y}});
  auto map = std::make_shared<std::vector<std::uint32_t>>();
  for (std::uint32_t p = 0; p < 12; ++p) map->push_back((p * 5 + 3) % 12);
  std::vector<SpatialMap> maps{map, map};
  expect_grad_ok([&] { return probe(remap_spatial(x, maps), 4); }, {{"x", x}});
  expect_grad_ok([&] { return probe(remap_spatial_adjoint(x, maps), 4); }, {{"x", x}});
}

TEST_CASE("second-order gradients through a conv net (gradient penalty)") {
  // penalty(w) = || d/dx sum(r * act(conv(act(conv(x, w1)), w2))) ||^2
  auto x = random_leaf({1, 2, 5, 5}, 40);
  auto w1 = random_leaf({3, 2, 3, 3}, 41), w2 = random_leaf({2, 3, 3, 3}, 42);
  auto f = [&] {
    auto xin = Var<double>(x.value(), true);
    auto h = softplus(conv2d(xin, w1, ConvGeometry{1, 1, 1}));
    auto out = sigmoid(conv2d(h, w2, ConvGeometry{2, 1, 1}));
    auto gx = grad(probe(out, 43), {xin}, true)[0];
    return sum(square(gx));
  };
  expect_grad_ok(f, {{"w1", w1}, {"w2", w2}}, 1e-5);
}

TEST_CASE("second-order gradients through leaky relu and linear layers") {
  ParameterSet<double> params;
  Initializer init(7);
  FullyConnected<double> fc1(params, "fc1", 4, 5, init), fc2(params, "fc2", 5, 1, init);
  auto x = random_leaf({3, 4}, 50);
  auto f = [&] {
    auto xin = Var<double>(x.value(), true);
    auto y = sum(fc2(lrelu_gain(fc1(xin))));
    auto gx = grad(y, {xin}, true)[0];
    return scale(sum(square(gx)), 0.5);
  };
  const auto report = check_gradients(f, params.entries());
  INFO(report.worst);
  CHECK(report.max_rel_error <= 1e-6);
}

TEST_CASE("no-grad mode records no graph") {
  auto a = random_leaf({2, 2}, 60);
  {
    NoGradGuard guard;
    auto y = mul(a, a);
    CHECK_FALSE(y.requires_grad());
  }
  auto y = mul(a, a);
  CHECK(y.requires_grad());
  CHECK_THROWS_AS(backward(y), ShapeError);  // non-scalar
}

TEST_CASE("gradients accumulate over repeated use of a leaf") {
  auto a = Var<double>::parameter(Tensor<double>(Shape{1}, std::vector<double>{3.0}));
  backward(add(mul(a, a), scale(a, 2.0)));  // d/da (a^2 + 2a) = 2a + 2
  CHECK(a.grad()[0] == 8.0);
}

TEST_CASE("shape errors are reported") {
  auto a = random_leaf({2, 3}, 1), b = random_leaf({3, 2}, 2);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(expand(a, Shape{2, 4}), ShapeError);
  CHECK_THROWS_AS(slice(a, 1, 2, 2), ShapeError);
}
