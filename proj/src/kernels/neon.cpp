// NEON variants for aarch64. Only the float gemm/dot/axpy paths are
// vectorized; double and the optimizer fall back to the reference loops.

#include <arm_neon.h>

#include <algorithm>
#include <cstring>

#include "guti/kernels.hpp"

namespace guti::kernels::neon {
namespace {

template <int MR>
inline void tile4x(std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c,
                   std::size_t ldc, bool accumulate) {
  float32x4_t acc[MR][2];
  for (int r = 0; r < MR; ++r) {
    acc[r][0] = accumulate ? vld1q_f32(c + r * ldc) : vdupq_n_f32(0.f);
    acc[r][1] = accumulate ? vld1q_f32(c + r * ldc + 4) : vdupq_n_f32(0.f);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const float32x4_t b0 = vld1q_f32(b + p * ldb);
    const float32x4_t b1 = vld1q_f32(b + p * ldb + 4);
    for (int r = 0; r < MR; ++r) {
      const float32x4_t av = vdupq_n_f32(a[r * lda + p]);
      acc[r][0] = vfmaq_f32(acc[r][0], av, b0);
      acc[r][1] = vfmaq_f32(acc[r][1], av, b1);
    }
  }
  for (int r = 0; r < MR; ++r) {
    vst1q_f32(c + r * ldc, acc[r][0]);
    vst1q_f32(c + r * ldc + 4, acc[r][1]);
  }
}

template <int MR>
inline void rows(std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb,
                 float* c, std::size_t ldc, bool accumulate) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) tile4x<MR>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
  if (j == n) return;
  for (int r = 0; r < MR; ++r) {
    float* crow = c + r * ldc;
    if (!accumulate)
      for (std::size_t jj = j; jj < n; ++jj) crow[jj] = 0;
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t jj = j; jj < n; ++jj) crow[jj] += a[r * lda + p] * b[p * ldb + jj];
  }
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
          std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) rows<4>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
  for (; i < m; ++i) rows<1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
}

float dot(const float* x, const float* y, std::size_t n) {
  float32x4_t s = vdupq_n_f32(0.f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) s = vfmaq_f32(s, vld1q_f32(x + i), vld1q_f32(y + i));
  float r = vaddvq_f32(s);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t av = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), av, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable<float> f32{&gemm, &dot, &axpy, scalar::f32.adam, scalar::f32.gelu, scalar::f32.gelu_backward};
const KernelTable<double> f64 = scalar::f64;

}  // namespace guti::kernels::neon
