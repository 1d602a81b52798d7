// Compiled with -mavx2 -mfma; only reached through the dispatcher after a
// CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "styleinv/kernels.hpp"

namespace styleinv::kernels {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using reg = __m256;
  static constexpr std::size_t width = 8;
  static reg zero() { return _mm256_setzero_ps(); }
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg set1(float v) { return _mm256_set1_ps(v); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static float hsum(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

template <>
struct Vec<double> {
  using reg = __m256d;
  static constexpr std::size_t width = 4;
  static reg zero() { return _mm256_setzero_pd(); }
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg set1(double v) { return _mm256_set1_pd(v); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static double hsum(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sw = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
  }
};

constexpr std::size_t kRows = 4;

// C[0:rows, 0:2W] += alpha * A[0:rows, 0:k] * P, P a packed k x 2W panel.
template <typename T, std::size_t Rows>
inline void micro_kernel(std::size_t k, T alpha, const T* a, std::size_t lda, const T* panel, T* c,
                         std::size_t ldc) {
  using V = Vec<T>;
  constexpr std::size_t W = V::width;
  typename V::reg acc[Rows][2];
  for (std::size_t r = 0; r < Rows; ++r) acc[r][0] = acc[r][1] = V::zero();
  for (std::size_t p = 0; p < k; ++p) {
    const auto b0 = V::load(panel + p * 2 * W);
    const auto b1 = V::load(panel + p * 2 * W + W);
    for (std::size_t r = 0; r < Rows; ++r) {
      const auto av = V::set1(a[r * lda + p]);
      acc[r][0] = V::fmadd(av, b0, acc[r][0]);
      acc[r][1] = V::fmadd(av, b1, acc[r][1]);
    }
  }
  const auto al = V::set1(alpha);
  for (std::size_t r = 0; r < Rows; ++r) {
    T* row = c + r * ldc;
    V::store(row, V::fmadd(al, acc[r][0], V::load(row)));
    V::store(row + W, V::fmadd(al, acc[r][1], V::load(row + W)));
  }
}

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a, std::size_t lda,
             const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  constexpr std::size_t NR = 2 * Vec<T>::width;
  std::vector<T> panel(k * NR);
  const std::size_t n_full = n - n % NR;
  for (std::size_t j = 0; j < n_full; j += NR) {
    for (std::size_t p = 0; p < k; ++p) std::copy_n(b + p * ldb + j, NR, panel.data() + p * NR);
    std::size_t i = 0;
    for (; i + kRows <= m; i += kRows)
      micro_kernel<T, kRows>(k, alpha, a + i * lda, lda, panel.data(), c + i * ldc + j, ldc);
    for (; i < m; ++i) micro_kernel<T, 1>(k, alpha, a + i * lda, lda, panel.data(), c + i * ldc + j, ldc);
  }
  if (n_full == n) return;
  // Ragged right edge. Same fused operation order as one vector lane, so a
  // column's result does not depend on where it falls in the matrix.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = n_full; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[i * lda + p], b[p * ldb + j], acc);
      c[i * ldc + j] = std::fma(alpha, acc, c[i * ldc + j]);
    }
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, std::size_t ld, std::vector<T>& dst) {
  dst.resize(rows * cols);
  constexpr std::size_t B = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += B)
    for (std::size_t c0 = 0; c0 < cols; c0 += B)
      for (std::size_t r = r0; r < std::min(rows, r0 + B); ++r)
        for (std::size_t cc = c0; cc < std::min(cols, c0 + B); ++cc) dst[cc * rows + r] = src[r * ld + cc];
}

template <typename T>
void gemm_avx2(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
               const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
               std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* row = c + i * ldc;
    if (beta == T(0))
      std::fill_n(row, n, T(0));
    else if (beta != T(1))
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
  }
  if (k == 0 || m == 0 || n == 0) return;
  std::vector<T> at, bt;
  if (trans_a) {
    transpose(k, m, a, lda, at);
    a = at.data();
    lda = k;
  }
  if (trans_b) {
    transpose(n, k, b, ldb, bt);
    b = bt.data();
    ldb = n;
  }
  gemm_nn(m, n, k, alpha, a, lda, b, ldb, c, ldc);
}

template <typename T>
T dot_avx2(std::size_t n, const T* x, const T* y) {
  using V = Vec<T>;
  constexpr std::size_t W = V::width;
  auto a0 = V::zero(), a1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    a0 = V::fmadd(V::load(x + i), V::load(y + i), a0);
    a1 = V::fmadd(V::load(x + i + W), V::load(y + i + W), a1);
  }
  T acc = V::hsum(a0) + V::hsum(a1);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void axpy_avx2(std::size_t n, T alpha, const T* x, T* y) {
  using V = Vec<T>;
  constexpr std::size_t W = V::width;
  const auto al = V::set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) V::store(y + i, V::fmadd(al, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

template <typename T>
const KernelTable<T>* avx2_table() {
  static const KernelTable<T> table{&gemm_avx2<T>, &dot_avx2<T>, &axpy_avx2<T>};
  return &table;
}

template const KernelTable<float>* avx2_table<float>();
template const KernelTable<double>* avx2_table<double>();

}  // namespace styleinv::kernels
