#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "styleinv/kernels.hpp"
#include "styleinv/rng.hpp"

namespace k = styleinv::kernels;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, styleinv::rng::Generator& g) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(g.normal());
  return v;
}

template <typename T>
void check_gemm_equivalence(double tol) {
  const auto* fast = k::avx2_table<T>();
  if (fast == nullptr || k::detected_isa() != k::Isa::avx2) {
    MESSAGE("AVX2 kernels unavailable on this host; equivalence not exercised");
    return;
  }
  const auto& ref = k::scalar_table<T>();
  styleinv::rng::Generator g(11, 99u);
  const std::array<std::array<std::size_t, 3>, 7> shapes{{{1, 1, 1}, {3, 5, 7}, {4, 16, 9}, {5, 17, 33}, {13, 64, 72}, {8, 100, 3}, {33, 31, 130}}};
  for (auto [m, n, kk] : shapes) {
    for (int ta = 0; ta < 2; ++ta)
      for (int tb = 0; tb < 2; ++tb)
        for (T beta : {T(0), T(1), T(0.5)}) {
          auto a = random_vec<T>(m * kk, g);
          auto b = random_vec<T>(kk * n, g);
          auto c0 = random_vec<T>(m * n, g);
          auto c1 = c0;
          const std::size_t lda = ta ? m : kk, ldb = tb ? kk : n;
          ref.gemm(ta, tb, m, n, kk, T(0.75), a.data(), lda, b.data(), ldb, beta, c0.data(), n);
          fast->gemm(ta, tb, m, n, kk, T(0.75), a.data(), lda, b.data(), ldb, beta, c1.data(), n);
          for (std::size_t i = 0; i < m * n; ++i)
            REQUIRE(std::abs(double(c0[i]) - double(c1[i])) <= tol * (1.0 + std::abs(double(c0[i]))));
        }
  }
  for (std::size_t n : {0u, 1u, 7u, 8u, 31u, 257u}) {
    auto x = random_vec<T>(n, g), y = random_vec<T>(n, g);
    CHECK(std::abs(double(ref.dot(n, x.data(), y.data())) - double(fast->dot(n, x.data(), y.data()))) <= tol * (1.0 + n));
    auto y0 = y, y1 = y;
    ref.axpy(n, T(-1.25), x.data(), y0.data());
    fast->axpy(n, T(-1.25), x.data(), y1.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(double(y0[i]) - double(y1[i])) <= tol * 4);
  }
}

}  // namespace

TEST_CASE("scalar gemm matches a hand-computed product") {
  // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
  const double a[] = {1, 2, 3, 4}, b[] = {5, 6, 7, 8};
  double c[4] = {};
  k::scalar_table<double>().gemm(false, false, 2, 2, 2, 1.0, a, 2, b, 2, 0.0, c, 2);
  CHECK(c[0] == 19);
  CHECK(c[1] == 22);
  CHECK(c[2] == 43);
  CHECK(c[3] == 50);
  // A^T * B = [1 3; 2 4] * B = [26 30; 38 44]
  k::scalar_table<double>().gemm(true, false, 2, 2, 2, 1.0, a, 2, b, 2, 0.0, c, 2);
  CHECK(c[0] == 26);
  CHECK(c[3] == 44);
}

TEST_CASE("beta zero overwrites NaN garbage in C") {
  const float a[] = {1, 2}, b[] = {3, 4};
  float c[1] = {std::nanf("")};
  k::scalar_table<float>().gemm(false, false, 1, 1, 2, 1.0f, a, 2, b, 1, 0.0f, c, 1);
  CHECK(c[0] == 11.0f);
  if (const auto* fast = k::avx2_table<float>(); fast && k::detected_isa() == k::Isa::avx2) {
    c[0] = std::nanf("");
    fast->gemm(false, false, 1, 1, 2, 1.0f, a, 2, b, 1, 0.0f, c, 1);
    CHECK(c[0] == 11.0f);
  }
}

TEST_CASE("AVX2 kernels agree with the scalar reference (float)") { check_gemm_equivalence<float>(2e-5); }
TEST_CASE("AVX2 kernels agree with the scalar reference (double)") { check_gemm_equivalence<double>(1e-12); }

TEST_CASE("isa switch falls back and restores") {
  const auto before = k::active_isa();
  CHECK(k::set_active_isa(k::Isa::scalar) == k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);
  k::set_active_isa(before);
  CHECK(k::active_isa() == before);
}

// Every output element must depend only on its own row of A and column of B,
// never on where it sits in C; batched rendering relies on this for bitwise
// equality with single-frame calls.
template <typename T>
void check_position_independence(const k::KernelTable<T>& table) {
  styleinv::rng::Generator g(5, 7u);
  for (auto [m, n, kk] : std::array<std::array<std::size_t, 3>, 3>{{{5, 19, 13}, {9, 40, 64}, {3, 8, 7}}})
    for (int ta = 0; ta < 2; ++ta)
      for (int tb = 0; tb < 2; ++tb) {
        auto a = random_vec<T>(m * kk, g), b = random_vec<T>(kk * n, g);
        const std::size_t lda = ta ? m : kk, ldb = tb ? kk : n;
        std::vector<T> c(m * n);
        table.gemm(ta, tb, m, n, kk, T(1), a.data(), lda, b.data(), ldb, T(0), c.data(), n);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            // the same element computed as a 1x1 product
            std::vector<T> row(kk), col(kk);
            for (std::size_t p = 0; p < kk; ++p) {
              row[p] = ta ? a[p * m + i] : a[i * kk + p];
              col[p] = tb ? b[j * kk + p] : b[p * n + j];
            }
            T single = 0;
            table.gemm(false, false, 1, 1, kk, T(1), row.data(), kk, col.data(), 1, T(0), &single, 1);
            REQUIRE(single == c[i * n + j]);
          }
      }
}

TEST_CASE("gemm results do not depend on the element's position in C") {
  check_position_independence<float>(k::scalar_table<float>());
  check_position_independence<double>(k::scalar_table<double>());
  if (k::detected_isa() == k::Isa::avx2) {
    check_position_independence<float>(*k::avx2_table<float>());
    check_position_independence<double>(*k::avx2_table<double>());
  }
}
