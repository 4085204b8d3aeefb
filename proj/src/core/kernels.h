// core/kernels.h
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

#ifndef SPEECHCHAIN_CORE_KERNELS_H_
#define SPEECHCHAIN_CORE_KERNELS_H_

#include <cstddef>
#include <string>

namespace speechchain {
namespace kernels {

// Dense inner loops used by the tensor engine. Every kernel has a scalar
// reference implementation plus a SIMD variant: AVX2+FMA on x86-64
// (selected at startup from CPUID) and NEON on aarch64. The backend can be
// overridden, and the tests compare the variants for equivalence.

enum class Backend { kScalar, kAvx2, kNeon };

Backend active_backend();
bool backend_supported(Backend b);
// Throws std::runtime_error if the requested backend is not supported
// on this machine.
void set_backend(Backend b);
std::string backend_name(Backend b);

// Row-major c[m x n] = a[m x k] * b[k x n].
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);

// Row-major c[m x n] += a[m x k] * b[k x n].
template <typename T>
void matmul_acc(const T* a, const T* b, T* c, int m, int k, int n);

template <typename T>
void add(const T* a, const T* b, T* y, int n);

template <typename T>
void sub(const T* a, const T* b, T* y, int n);

template <typename T>
void mul(const T* a, const T* b, T* y, int n);

// y += alpha * x
template <typename T>
void axpy(T alpha, const T* x, T* y, int n);

// y = alpha * x
template <typename T>
void scale(const T* x, T alpha, T* y, int n);

template <typename T>
T dot(const T* a, const T* b, int n);

template <typename T>
T sum(const T* x, int n);

// y[cols x rows] = transpose of a[rows x cols]; scalar on every backend.
template <typename T>
void transpose(const T* a, T* y, int rows, int cols);

}  // namespace kernels
}  // namespace speechchain

#endif  // SPEECHCHAIN_CORE_KERNELS_H_
