// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <type_traits>
#include <vector>

#include "gelu.hpp"
#include "guti/kernels.hpp"

namespace guti::kernels::avx2 {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using reg = __m256;
  static constexpr std::size_t lanes = 8;
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg x) { _mm256_storeu_ps(p, x); }
  static reg set1(float x) { return _mm256_set1_ps(x); }
  static reg zero() { return _mm256_setzero_ps(); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static reg div(reg a, reg b) { return _mm256_div_ps(a, b); }
  static reg sqrt(reg a) { return _mm256_sqrt_ps(a); }
  static float hsum(reg x) {
    __m128 lo = _mm256_castps256_ps128(x);
    __m128 hi = _mm256_extractf128_ps(x, 1);
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
  static constexpr std::size_t lanes = 4;
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg x) { _mm256_storeu_pd(p, x); }
  static reg set1(double x) { return _mm256_set1_pd(x); }
  static reg zero() { return _mm256_setzero_pd(); }
  static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static reg div(reg a, reg b) { return _mm256_div_pd(a, b); }
  static reg sqrt(reg a) { return _mm256_sqrt_pd(a); }
  static double hsum(reg x) {
    __m128d lo = _mm256_castpd256_pd128(x);
    __m128d hi = _mm256_extractf128_pd(x, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d hi64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, hi64));
  }
};

// Register tile: MR rows of C by NV vectors of columns, streaming over k.
// b is either a row-major slice (ldb = row stride) or a packed panel (ldb = NV * lanes).
template <typename T, int MR, int NV>
inline void tile(std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
                 bool accumulate) {
  using V = Vec<T>;
  typename V::reg acc[MR][NV];
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < NV; ++v)
      acc[r][v] = accumulate ? V::load(c + r * ldc + v * V::lanes) : V::zero();
  for (std::size_t p = 0; p < k; ++p) {
    typename V::reg bv[NV];
    for (int v = 0; v < NV; ++v) bv[v] = V::load(b + p * ldb + v * V::lanes);
    for (int r = 0; r < MR; ++r) {
      const typename V::reg av = V::set1(a[r * lda + p]);
      for (int v = 0; v < NV; ++v) acc[r][v] = V::fmadd(av, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < NV; ++v) V::store(c + r * ldc + v * V::lanes, acc[r][v]);
}

// Column tail, same summation order as the reference.
template <typename T>
inline void tail(std::size_t rows, std::size_t j, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* crow = c + r * ldc;
    if (!accumulate)
      for (std::size_t jj = j; jj < n; ++jj) crow[jj] = 0;
    for (std::size_t p = 0; p < k; ++p) {
      const T arp = a[r * lda + p];
      const T* brow = b + p * ldb;
      for (std::size_t jj = j; jj < n; ++jj) crow[jj] += arp * brow[jj];
    }
  }
}

template <typename T, int MR>
inline void row_block(std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c,
                      std::size_t ldc, bool accumulate) {
  constexpr std::size_t L = Vec<T>::lanes;
  std::size_t j = 0;
  for (; j + 2 * L <= n; j += 2 * L) tile<T, MR, 2>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
  for (; j + L <= n; j += L) tile<T, MR, 1>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
  if (j < n) tail<T>(MR, j, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

// Packed path: B's k-block is copied into contiguous panels of 2 vectors so the
// inner loop streams one cache line per k step.
template <typename T, int MR>
inline void packed_row_block(std::size_t panels, std::size_t k, const T* a, std::size_t lda, const T* packed, T* c,
                             std::size_t ldc, bool accumulate) {
  constexpr std::size_t W = 2 * Vec<T>::lanes;
  for (std::size_t q = 0; q < panels; ++q)
    tile<T, MR, 2>(k, a, lda, packed + q * k * W, W, c + q * W, ldc, accumulate);
}

template <typename T, int MR>
inline void rows_dispatch(std::size_t rows, std::size_t panels, std::size_t k, const T* a, std::size_t lda,
                          const T* packed, T* c, std::size_t ldc, bool accumulate) {
  if constexpr (MR > 0) {
    if (rows == static_cast<std::size_t>(MR)) return packed_row_block<T, MR>(panels, k, a, lda, packed, c, ldc, accumulate);
    rows_dispatch<T, MR - 1>(rows, panels, k, a, lda, packed, c, ldc, accumulate);
  }
}

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T* c, std::size_t ldc, bool accumulate) {
  constexpr std::size_t KC = 256;
  constexpr std::size_t MR = 6;
  constexpr std::size_t W = 2 * Vec<T>::lanes;
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(T));
    return;
  }
  const std::size_t panels = n / W;
  const bool pack = m >= 2 * MR && panels > 0;
  thread_local std::vector<T> buffer;
  for (std::size_t p0 = 0; p0 < k; p0 += KC) {
    const std::size_t kc = std::min(KC, k - p0);
    const bool acc = accumulate || p0 > 0;
    const T* ap = a + p0;
    const T* bp = b + p0 * ldb;
    if (pack) {
      buffer.resize(panels * kc * W);
      for (std::size_t q = 0; q < panels; ++q) {
        T* dst = buffer.data() + q * kc * W;
        for (std::size_t p = 0; p < kc; ++p) std::memcpy(dst + p * W, bp + p * ldb + q * W, W * sizeof(T));
      }
      const std::size_t j = panels * W;
      std::size_t i = 0;
      for (; i + MR <= m; i += MR) {
        packed_row_block<T, MR>(panels, kc, ap + i * lda, lda, buffer.data(), c + i * ldc, ldc, acc);
        if (j < n) row_block<T, MR>(n - j, kc, ap + i * lda, lda, bp + j, ldb, c + i * ldc + j, ldc, acc);
      }
      if (i < m) {
        rows_dispatch<T, MR - 1>(m - i, panels, kc, ap + i * lda, lda, buffer.data(), c + i * ldc, ldc, acc);
        if (j < n) {
          for (std::size_t r = i; r < m; ++r)
            row_block<T, 1>(n - j, kc, ap + r * lda, lda, bp + j, ldb, c + r * ldc + j, ldc, acc);
        }
      }
      continue;
    }
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) row_block<T, MR>(n, kc, ap + i * lda, lda, bp, ldb, c + i * ldc, ldc, acc);
    for (; i < m; ++i) row_block<T, 1>(n, kc, ap + i * lda, lda, bp, ldb, c + i * ldc, ldc, acc);
  }
}

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  typename V::reg s0 = V::zero(), s1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * L <= n; i += 2 * L) {
    s0 = V::fmadd(V::load(x + i), V::load(y + i), s0);
    s1 = V::fmadd(V::load(x + i + L), V::load(y + i + L), s1);
  }
  for (; i + L <= n; i += L) s0 = V::fmadd(V::load(x + i), V::load(y + i), s0);
  T s = V::hsum(V::add(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  const typename V::reg av = V::set1(alpha);
  std::size_t i = 0;
  for (; i + L <= n; i += L) V::store(y + i, V::fmadd(av, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void adam(T* param, const T* grad, T* m, T* v, std::size_t n, T lr, T beta1, T beta2, T eps, T bc2) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  const T sqrt_bc2 = std::sqrt(bc2);
  const auto b1 = V::set1(beta1), b2 = V::set1(beta2);
  const auto c1 = V::set1(T(1) - beta1), c2 = V::set1(T(1) - beta2);
  const auto vlr = V::set1(lr), veps = V::set1(eps), vbc = V::set1(sqrt_bc2);
  std::size_t i = 0;
  for (; i + L <= n; i += L) {
    const auto g = V::load(grad + i);
    const auto mi = V::add(V::mul(b1, V::load(m + i)), V::mul(c1, g));
    const auto vi = V::add(V::mul(b2, V::load(v + i)), V::mul(V::mul(c2, g), g));
    V::store(m + i, mi);
    V::store(v + i, vi);
    const auto denom = V::add(V::div(V::sqrt(vi), vbc), veps);
    const auto step = V::div(V::mul(vlr, mi), denom);
    V::store(param + i, V::sub(V::load(param + i), step));
  }
  for (; i < n; ++i) {
    const T g = grad[i];
    m[i] = beta1 * m[i] + (T(1) - beta1) * g;
    v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
    param[i] -= lr * m[i] / (std::sqrt(v[i]) / sqrt_bc2 + eps);
  }
}

// exp for floats: Cody-Waite range reduction plus a degree-5 polynomial
// (Cephes expf), about 1 ulp over the clamped range.
inline __m256 exp_ps(__m256 x) {
  x = _mm256_min_ps(_mm256_max_ps(x, _mm256_set1_ps(-87.0f)), _mm256_set1_ps(88.0f));
  const __m256 n = _mm256_round_ps(_mm256_mul_ps(x, _mm256_set1_ps(1.44269504088896341f)),
                                   _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256 r = _mm256_fnmadd_ps(n, _mm256_set1_ps(0.693359375f), x);
  r = _mm256_fnmadd_ps(n, _mm256_set1_ps(-2.12194440e-4f), r);
  __m256 p = _mm256_set1_ps(1.9875691500e-4f);
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.3981999507e-3f));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(8.3334519073e-3f));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(4.1665795894e-2f));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.6666665459e-1f));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(5.0000001201e-1f));
  p = _mm256_fmadd_ps(p, _mm256_mul_ps(r, r), _mm256_add_ps(r, _mm256_set1_ps(1.0f)));
  const __m256i e = _mm256_slli_epi32(_mm256_add_epi32(_mm256_cvtps_epi32(n), _mm256_set1_epi32(127)), 23);
  return _mm256_mul_ps(p, _mm256_castsi256_ps(e));
}

// tanh(u) = 1 - 2 / (exp(2u) + 1)
inline __m256 tanh_ps(__m256 u) {
  const __m256 e = exp_ps(_mm256_add_ps(u, u));
  const __m256 one = _mm256_set1_ps(1.0f);
  return _mm256_sub_ps(one, _mm256_div_ps(_mm256_set1_ps(2.0f), _mm256_add_ps(e, one)));
}

inline __m256 gelu_inner(__m256 x) {
  const __m256 x3 = _mm256_mul_ps(_mm256_mul_ps(x, x), x);
  return _mm256_mul_ps(_mm256_set1_ps(static_cast<float>(kGeluC)),
                       _mm256_fmadd_ps(_mm256_set1_ps(static_cast<float>(kGeluA)), x3, x));
}

template <typename T>
void gelu(const T* x, T* y, std::size_t n) {
  std::size_t i = 0;
  if constexpr (std::is_same_v<T, float>) {
    const __m256 half = _mm256_set1_ps(0.5f), one = _mm256_set1_ps(1.0f);
    for (; i + 8 <= n; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      const __m256 t = tanh_ps(gelu_inner(v));
      _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_mul_ps(half, v), _mm256_add_ps(one, t)));
    }
  }
  for (; i < n; ++i) y[i] = gelu_value(x[i]);
}

template <typename T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
  std::size_t i = 0;
  if constexpr (std::is_same_v<T, float>) {
    const __m256 half = _mm256_set1_ps(0.5f), one = _mm256_set1_ps(1.0f);
    const __m256 c = _mm256_set1_ps(static_cast<float>(kGeluC));
    const __m256 a3 = _mm256_set1_ps(static_cast<float>(3.0 * kGeluA));
    for (; i + 8 <= n; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      const __m256 t = tanh_ps(gelu_inner(v));
      const __m256 sech2 = _mm256_fnmadd_ps(t, t, one);
      const __m256 du = _mm256_mul_ps(c, _mm256_fmadd_ps(a3, _mm256_mul_ps(v, v), one));
      const __m256 d = _mm256_fmadd_ps(_mm256_mul_ps(half, v), _mm256_mul_ps(sech2, du), _mm256_mul_ps(half, _mm256_add_ps(one, t)));
      _mm256_storeu_ps(dx + i, _mm256_mul_ps(_mm256_loadu_ps(dy + i), d));
    }
  }
  for (; i < n; ++i) dx[i] = dy[i] * gelu_derivative(x[i]);
}

}  // namespace

const KernelTable<float> f32{&gemm<float>, &dot<float>, &axpy<float>, &adam<float>, &gelu<float>,
                             &gelu_backward<float>};
const KernelTable<double> f64{&gemm<double>, &dot<double>, &axpy<double>, &adam<double>, &gelu<double>,
                              &gelu_backward<double>};

}  // namespace guti::kernels::avx2
