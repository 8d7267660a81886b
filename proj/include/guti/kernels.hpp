#pragma once

// Data-parallel inner loops used by the model and optimizer.
//
// Every kernel has a scalar reference implementation; vector variants (AVX2+FMA
// on x86-64, NEON on aarch64) are compiled in separate translation units and
// picked once at startup from the CPU's capabilities. GUTI_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <string_view>
#include <vector>

namespace guti::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

template <typename T>
struct KernelTable {
  /// C[m x n] (+)= A[m x k] * B[k x n], all row-major with leading dimensions.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
               std::size_t ldb, T* c, std::size_t ldc, bool accumulate);
  T (*dot)(const T* x, const T* y, std::size_t n);
  /// y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  /// One Adam update over a flat parameter block. lr already carries the bias
  /// correction of the first moment; bc2 is 1 - beta2^t.
  void (*adam)(T* param, const T* grad, T* m, T* v, std::size_t n, T lr, T beta1, T beta2, T eps, T bc2);
  /// y = gelu(x), tanh approximation
  void (*gelu)(const T* x, T* y, std::size_t n);
  /// dx = dy * gelu'(x)
  void (*gelu_backward)(const T* x, const T* dy, T* dx, std::size_t n);
};

/// ISAs compiled in and supported by the running CPU, scalar first.
const std::vector<Isa>& available_isas();

template <typename T>
const KernelTable<T>& table_for(Isa isa);

/// Currently selected ISA (best available unless overridden).
Isa active_isa();

/// Override the dispatch choice; ignored if `isa` is unavailable. Returns the
/// ISA actually in effect.
Isa select_isa(Isa isa);

template <typename T>
const KernelTable<T>& active() {
  return table_for<T>(active_isa());
}

// Per-ISA tables, defined in the ISA-specific translation units.
namespace scalar {
extern const KernelTable<float> f32;
extern const KernelTable<double> f64;
}  // namespace scalar

namespace avx2 {
extern const KernelTable<float> f32;
extern const KernelTable<double> f64;
}  // namespace avx2

namespace neon {
extern const KernelTable<float> f32;
extern const KernelTable<double> f64;
}  // namespace neon

}  // namespace guti::kernels
