// core/kernels.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/kernels.h"

#include <cstring>
#include <stdexcept>
#include <type_traits>

namespace speechchain {
namespace kernels {

namespace scalar {

// Reference kernels. The accumulation order (j fixed, l ascending) matches
// the SIMD variants so the two differ only by per-element rounding.

template <typename T>
void matmul_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const T ail = arow[l];
      const T* brow = b + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

template <typename T>
void add(const T* a, const T* b, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

template <typename T>
void sub(const T* a, const T* b, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

template <typename T>
void axpy(T alpha, const T* x, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(const T* x, T alpha, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = alpha * x[i];
}

template <typename T>
T dot(const T* a, const T* b, int n) {
  T acc = T(0);
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T sum(const T* x, int n) {
  T acc = T(0);
  for (int i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace scalar

#define SPEECHCHAIN_SIMD_DECLS                                                   \
  void matmul_acc_f32(const float* a, const float* b, float* c, int m, int k,    \
                      int n);                                                    \
  void matmul_acc_f64(const double* a, const double* b, double* c, int m,        \
                      int k, int n);                                             \
  void add_f32(const float* a, const float* b, float* y, int n);                 \
  void add_f64(const double* a, const double* b, double* y, int n);              \
  void sub_f32(const float* a, const float* b, float* y, int n);                 \
  void sub_f64(const double* a, const double* b, double* y, int n);              \
  void mul_f32(const float* a, const float* b, float* y, int n);                 \
  void mul_f64(const double* a, const double* b, double* y, int n);              \
  void axpy_f32(float alpha, const float* x, float* y, int n);                   \
  void axpy_f64(double alpha, const double* x, double* y, int n);                \
  void scale_f32(const float* x, float alpha, float* y, int n);                  \
  void scale_f64(const double* x, double alpha, double* y, int n);               \
  float dot_f32(const float* a, const float* b, int n);                          \
  double dot_f64(const double* a, const double* b, int n);                       \
  float sum_f32(const float* x, int n);                                          \
  double sum_f64(const double* x, int n);

#ifdef SPEECHCHAIN_HAVE_AVX2_TU
namespace simd {  // kernels_avx2.cc, compiled with -mavx2 -mfma
SPEECHCHAIN_SIMD_DECLS
}
#endif
#ifdef SPEECHCHAIN_HAVE_NEON_TU
namespace simd {  // kernels_neon.cc
SPEECHCHAIN_SIMD_DECLS
}
#endif
#undef SPEECHCHAIN_SIMD_DECLS

namespace {

bool cpu_has_avx2_fma() {
#if defined(SPEECHCHAIN_HAVE_AVX2_TU) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
#ifdef SPEECHCHAIN_HAVE_NEON_TU
  return Backend::kNeon;  // baseline on aarch64
#else
  return cpu_has_avx2_fma() ? Backend::kAvx2 : Backend::kScalar;
#endif
}

Backend& backend_ref() {
  static Backend b = detect_backend();
  return b;
}

}  // namespace

Backend active_backend() { return backend_ref(); }

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::kScalar: return true;
    case Backend::kAvx2: return cpu_has_avx2_fma();
    case Backend::kNeon:
#ifdef SPEECHCHAIN_HAVE_NEON_TU
      return true;
#else
      return false;
#endif
  }
  return false;
}

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw std::runtime_error("kernel backend not supported on this machine: " +
                             backend_name(b));
  }
  backend_ref() = b;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

#if defined(SPEECHCHAIN_HAVE_AVX2_TU) || defined(SPEECHCHAIN_HAVE_NEON_TU)
#define SPEECHCHAIN_DISPATCH(fn_f32, fn_f64, scalar_call, ...)      \
  if (backend_ref() != Backend::kScalar) {                          \
    if constexpr (std::is_same_v<T, float>)                         \
      return simd::fn_f32(__VA_ARGS__);                             \
    else                                                            \
      return simd::fn_f64(__VA_ARGS__);                             \
  }                                                                 \
  return scalar_call
#else
#define SPEECHCHAIN_DISPATCH(fn_f32, fn_f64, scalar_call, ...) return scalar_call
#endif

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  std::memset(c, 0, sizeof(T) * static_cast<size_t>(m) * n);
  matmul_acc(a, b, c, m, k, n);
}

template <typename T>
void matmul_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  SPEECHCHAIN_DISPATCH(matmul_acc_f32, matmul_acc_f64,
                       scalar::matmul_acc(a, b, c, m, k, n), a, b, c, m, k, n);
}

template <typename T>
void add(const T* a, const T* b, T* y, int n) {
  SPEECHCHAIN_DISPATCH(add_f32, add_f64, scalar::add(a, b, y, n), a, b, y, n);
}

template <typename T>
void sub(const T* a, const T* b, T* y, int n) {
  SPEECHCHAIN_DISPATCH(sub_f32, sub_f64, scalar::sub(a, b, y, n), a, b, y, n);
}

template <typename T>
void mul(const T* a, const T* b, T* y, int n) {
  SPEECHCHAIN_DISPATCH(mul_f32, mul_f64, scalar::mul(a, b, y, n), a, b, y, n);
}

template <typename T>
void axpy(T alpha, const T* x, T* y, int n) {
  SPEECHCHAIN_DISPATCH(axpy_f32, axpy_f64, scalar::axpy(alpha, x, y, n),
                       alpha, x, y, n);
}

template <typename T>
void scale(const T* x, T alpha, T* y, int n) {
  SPEECHCHAIN_DISPATCH(scale_f32, scale_f64, scalar::scale(x, alpha, y, n),
                       x, alpha, y, n);
}

template <typename T>
T dot(const T* a, const T* b, int n) {
  SPEECHCHAIN_DISPATCH(dot_f32, dot_f64, scalar::dot(a, b, n), a, b, n);
}

template <typename T>
T sum(const T* x, int n) {
  SPEECHCHAIN_DISPATCH(sum_f32, sum_f64, scalar::sum(x, n), x, n);
}

template <typename T>
void transpose(const T* a, T* y, int rows, int cols) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      y[static_cast<size_t>(j) * rows + i] = a[static_cast<size_t>(i) * cols + j];
}

#undef SPEECHCHAIN_DISPATCH

template void matmul<float>(const float*, const float*, float*, int, int, int);
template void matmul<double>(const double*, const double*, double*, int, int, int);
template void matmul_acc<float>(const float*, const float*, float*, int, int, int);
template void matmul_acc<double>(const double*, const double*, double*, int, int, int);
template void add<float>(const float*, const float*, float*, int);
template void add<double>(const double*, const double*, double*, int);
template void sub<float>(const float*, const float*, float*, int);
template void sub<double>(const double*, const double*, double*, int);
template void mul<float>(const float*, const float*, float*, int);
template void mul<double>(const double*, const double*, double*, int);
template void axpy<float>(float, const float*, float*, int);
template void axpy<double>(double, const double*, double*, int);
template void scale<float>(const float*, float, float*, int);
template void scale<double>(const double*, double, double*, int);
template float dot<float>(const float*, const float*, int);
template double dot<double>(const double*, const double*, int);
template float sum<float>(const float*, int);
template double sum<double>(const double*, int);
template void transpose<float>(const float*, float*, int, int);
template void transpose<double>(const double*, double*, int, int);

}  // namespace kernels
}  // namespace speechchain
