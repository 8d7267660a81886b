#pragma once

// Scalar GELU (tanh approximation) shared by the reference kernels and the
// vector tails.

#include <cmath>

namespace guti::kernels {

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
inline constexpr double kGeluA = 0.044715;

template <typename T>
inline T gelu_value(T x) {
  const T u = static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
inline T gelu_derivative(T x) {
  const T c = static_cast<T>(kGeluC), a = static_cast<T>(kGeluA);
  const T t = std::tanh(c * (x + a * x * x * x));
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * a * x * x);
}

}  // namespace guti::kernels
