#include <atomic>
#include <cstdlib>
#include <string>

#include "guti/kernels.hpp"

namespace guti::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(GUTI_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(GUTI_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> detect() {
  std::vector<Isa> out{Isa::scalar};
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (cpu_supports(isa)) out.push_back(isa);
  return out;
}

Isa initial_choice() {
  const auto& isas = available_isas();
  if (const char* env = std::getenv("GUTI_SIMD")) {
    const std::string want(env);
    for (Isa isa : isas)
      if (isa_name(isa) == want) return isa;
  }
  return isas.back();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_choice()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const std::vector<Isa>& available_isas() {
  static const std::vector<Isa> isas = detect();
  return isas;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa select_isa(Isa isa) {
  if (cpu_supports(isa)) current().store(isa, std::memory_order_relaxed);
  return active_isa();
}

template <>
const KernelTable<float>& table_for<float>(Isa isa) {
  switch (isa) {
#if defined(GUTI_HAVE_AVX2)
    case Isa::avx2: return avx2::f32;
#endif
#if defined(GUTI_HAVE_NEON)
    case Isa::neon: return neon::f32;
#endif
    default: return scalar::f32;
  }
}

template <>
const KernelTable<double>& table_for<double>(Isa isa) {
  switch (isa) {
#if defined(GUTI_HAVE_AVX2)
    case Isa::avx2: return avx2::f64;
#endif
#if defined(GUTI_HAVE_NEON)
    case Isa::neon: return neon::f64;
#endif
    default: return scalar::f64;
  }
}

}  // namespace guti::kernels
