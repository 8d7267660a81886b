#pragma once

// Row-wise building blocks shared by the batched forward/backward pass and the
// incremental decoder. Matrix products go through the dispatched kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "guti/kernels.hpp"
#include "guti/tensor.hpp"

namespace guti::ops {

inline constexpr double kLayerNormEps = 1e-5;

template <typename T>
void transpose(const T* src, std::size_t rows, std::size_t cols, std::size_t ld_src, T* dst) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * ld_src + j];
}

/// y[rows, out] = x[rows, in] * w[in, out] + b
template <typename T>
void linear(const kernels::KernelTable<T>& k, const T* x, std::size_t rows, const Tensor<T>& w, const Tensor<T>* b,
            T* y) {
  const std::size_t in = w.shape[0], out = w.shape[1];
  k.gemm(rows, out, in, x, in, w.ptr(), out, y, out, false);
  if (b)
    for (std::size_t r = 0; r < rows; ++r) k.axpy(T(1), b->ptr(), y + r * out, out);
}

/// Accumulates dw += x^T dy and db += colsum(dy); writes (or adds to) dx = dy w^T.
template <typename T>
void linear_backward(const kernels::KernelTable<T>& k, const T* x, std::size_t rows, const Tensor<T>& w, const T* dy,
                     T* dx, bool accumulate_dx, Tensor<T>& dw, Tensor<T>* db, std::vector<T>& scratch) {
  const std::size_t in = w.shape[0], out = w.shape[1];
  scratch.resize(std::max(in * rows, in * out));
  transpose(x, rows, in, in, scratch.data());
  k.gemm(in, out, rows, scratch.data(), rows, dy, out, dw.ptr(), out, true);
  if (db)
    for (std::size_t r = 0; r < rows; ++r) k.axpy(T(1), dy + r * out, db->ptr(), out);
  if (dx) {
    transpose(w.ptr(), in, out, out, scratch.data());
    k.gemm(rows, in, out, dy, out, scratch.data(), in, dx, in, accumulate_dx);
  }
}

template <typename T>
void layernorm(const T* x, std::size_t rows, std::size_t d, const T* gain, const T* bias, T* y, T* mean, T* rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    T* yr = y + r * d;
    for (std::size_t j = 0; j < d; ++j) yr[j] = (xr[j] - mu) * rs * gain[j] + bias[j];
    if (mean) mean[r] = mu;
    if (rstd) rstd[r] = rs;
  }
}

/// Adds the input gradient into dx.
template <typename T>
void layernorm_backward(const T* x, std::size_t rows, std::size_t d, const T* gain, const T* mean, const T* rstd,
                        const T* dy, T* dx, T* dgain, T* dbias) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    const T* dyr = dy + r * d;
    T* dxr = dx + r * d;
    const T mu = mean[r], rs = rstd[r];
    T sum_dxhat = 0, sum_dxhat_xhat = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const T xhat = (xr[j] - mu) * rs;
      const T dxhat = dyr[j] * gain[j];
      dgain[j] += dyr[j] * xhat;
      dbias[j] += dyr[j];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
    }
    const T inv_d = T(1) / static_cast<T>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const T xhat = (xr[j] - mu) * rs;
      const T dxhat = dyr[j] * gain[j];
      dxr[j] += rs * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
    }
  }
}

/// In-place softmax over the first n entries of row; entries [n, width) are zeroed.
template <typename T>
void softmax_prefix(T* row, std::size_t n, std::size_t width) {
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, row[j]);
  T sum = 0;
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    sum += row[j];
  }
  const T inv = T(1) / sum;
  for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
  for (std::size_t j = n; j < width; ++j) row[j] = 0;
}

}  // namespace guti::ops
