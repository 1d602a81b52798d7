#pragma once

// Dense linear-algebra kernels with a portable scalar reference and an AVX2/FMA
// variant. The variant is picked once at startup from CPUID; STYLEINV_ISA=scalar
// in the environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace styleinv::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA the host CPU supports (ignores the environment override).
Isa detected_isa();

/// ISA currently used by the dispatching entry points below.
Isa active_isa();

/// Switches the dispatching entry points. Requesting an ISA the CPU lacks
/// falls back to scalar. Returns the ISA actually selected.
Isa set_active_isa(Isa isa);

template <typename T>
struct KernelTable {
  // Row-major C = alpha * op(A) * op(B) + beta * C, op = transpose when flagged.
  // beta == 0 overwrites C without reading it.
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
               const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
               std::size_t ldc);
  T (*dot)(std::size_t n, const T* x, const T* y);
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
};

template <typename T>
const KernelTable<T>& scalar_table();

/// Null when the binary was built without the AVX2 translation unit.
template <typename T>
const KernelTable<T>* avx2_table();

template <typename T>
const KernelTable<T>& active_table();

template <typename T>
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
                 const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                 std::size_t ldc) {
  active_table<T>().gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <typename T>
inline T dot(std::size_t n, const T* x, const T* y) {
  return active_table<T>().dot(n, x, y);
}

template <typename T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
  active_table<T>().axpy(n, alpha, x, y);
}

}  // namespace styleinv::kernels
