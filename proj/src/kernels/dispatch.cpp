#include <atomic>
#include <cstdlib>
#include <string_view>

#include "styleinv/kernels.hpp"

namespace styleinv::kernels {
namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("STYLEINV_ISA"); env != nullptr && std::string_view(env) == "scalar")
    return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
#if defined(STYLEINV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__)) && \
    (defined(__x86_64__) || defined(__i386__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? Isa::avx2 : Isa::scalar;
#else
  return Isa::scalar;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  current().store(isa, std::memory_order_relaxed);
  return isa;
}

#ifndef STYLEINV_HAVE_AVX2
template <typename T>
const KernelTable<T>* avx2_table() {
  return nullptr;
}
template const KernelTable<float>* avx2_table<float>();
template const KernelTable<double>* avx2_table<double>();
#endif

template <typename T>
const KernelTable<T>& active_table() {
  if (active_isa() == Isa::avx2) {
    if (const auto* t = avx2_table<T>()) return *t;
  }
  return scalar_table<T>();
}

template const KernelTable<float>& active_table<float>();
template const KernelTable<double>& active_table<double>();

}  // namespace styleinv::kernels
