#include <cmath>
#include <cstring>

#include "guti/kernels.hpp"
#include "gelu.hpp"

namespace guti::kernels::scalar {
namespace {

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (!accumulate) std::memset(crow, 0, n * sizeof(T));
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * lda + p];
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void adam(T* param, const T* grad, T* m, T* v, std::size_t n, T lr, T beta1, T beta2, T eps, T bc2) {
  const T sqrt_bc2 = std::sqrt(bc2);
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grad[i];
    m[i] = beta1 * m[i] + (T(1) - beta1) * g;
    v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
    param[i] -= lr * m[i] / (std::sqrt(v[i]) / sqrt_bc2 + eps);
  }
}

template <typename T>
void gelu(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu_value(x[i]);
}

template <typename T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_derivative(x[i]);
}

}  // namespace

const KernelTable<float> f32{&gemm<float>, &dot<float>, &axpy<float>, &adam<float>, &gelu<float>,
                             &gelu_backward<float>};
const KernelTable<double> f64{&gemm<double>, &dot<double>, &axpy<double>, &adam<double>, &gelu<double>,
                              &gelu_backward<double>};

}  // namespace guti::kernels::scalar
