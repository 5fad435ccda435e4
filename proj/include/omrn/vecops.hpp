#pragma once

#include <cmath>
#include <cstddef>

namespace omrn {

// Small dense kernels shared by the forward and backward passes.  All matrices
// are row-major; every function runs in a fixed order so results are
// reproducible bit-for-bit.

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// y = W x, W is [rows x cols]
template <typename T>
inline void matvec(T* y, const T* W, const T* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(W + r * cols, x, cols);
}

// y += W x
template <typename T>
inline void matvec_acc(T* y, const T* W, const T* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot(W + r * cols, x, cols);
}

// y += W^T g, W is [rows x cols], g is [rows], y is [cols]
template <typename T>
inline void matvec_t_acc(T* y, const T* W, const T* g, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T gr = g[r];
    const T* row = W + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += gr * row[c];
  }
}

// G += g x^T, G is [rows x cols]
template <typename T>
inline void outer_acc(T* G, const T* g, const T* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T gr = g[r];
    T* row = G + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

template <typename T>
inline void axpy(T* y, T a, const T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// In-place stable softmax.  The normalizer is accumulated in double regardless
// of T so the entries sum to one well within float tolerance.
template <typename T>
inline void softmax_inplace(T* v, std::size_t n) {
  T mx = v[0];
  for (std::size_t i = 1; i < n; ++i) mx = v[i] > mx ? v[i] : mx;
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::exp(v[i] - mx);
    sum += static_cast<double>(v[i]);
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<T>(static_cast<double>(v[i]) / sum);
}

// g_logits[i] = p[i] * (g_p[i] - sum_j p[j] g_p[j]); safe to alias g_logits
// with g_p.
template <typename T>
inline void softmax_backward(T* g_logits, const T* p, const T* g_p, std::size_t n) {
  T inner = 0;
  for (std::size_t i = 0; i < n; ++i) inner += p[i] * g_p[i];
  for (std::size_t i = 0; i < n; ++i) g_logits[i] = p[i] * (g_p[i] - inner);
}

}  // namespace omrn
