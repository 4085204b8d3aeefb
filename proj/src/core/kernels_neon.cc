// core/kernels_neon.cc
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

// NEON is baseline on aarch64; this unit is only built there.

#include <arm_neon.h>

#include <cstddef>

namespace speechchain {
namespace kernels {
namespace simd {

void matmul_acc_f32(const float* a, const float* b, float* c, int m, int k, int n) {
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<size_t>(i) * k;
    float* crow = c + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const float32x4_t av = vdupq_n_f32(arow[l]);
      const float* brow = b + static_cast<size_t>(l) * n;
      int j = 0;
      for (; j < n4; j += 4) {
        float32x4_t cv = vld1q_f32(crow + j);
        cv = vfmaq_f32(cv, av, vld1q_f32(brow + j));
        vst1q_f32(crow + j, cv);
      }
      const float al = arow[l];
      for (; j < n; ++j) crow[j] += al * brow[j];
    }
  }
}

void matmul_acc_f64(const double* a, const double* b, double* c, int m, int k, int n) {
  const int n2 = n & ~1;
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const float64x2_t av = vdupq_n_f64(arow[l]);
      const double* brow = b + static_cast<size_t>(l) * n;
      int j = 0;
      for (; j < n2; j += 2) {
        float64x2_t cv = vld1q_f64(crow + j);
        cv = vfmaq_f64(cv, av, vld1q_f64(brow + j));
        vst1q_f64(crow + j, cv);
      }
      const double al = arow[l];
      for (; j < n; ++j) crow[j] += al * brow[j];
    }
  }
}

void add_f32(const float* a, const float* b, float* y, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void add_f64(const double* a, const double* b, double* y, int n) {
  int i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void sub_f32(const float* a, const float* b, float* y, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) y[i] = a[i] - b[i];
}

void sub_f64(const double* a, const double* b, double* y, int n) {
  int i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) y[i] = a[i] - b[i];
}

void mul_f32(const float* a, const float* b, float* y, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void mul_f64(const double* a, const double* b, double* y, int n) {
  int i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void axpy_f32(float alpha, const float* x, float* y, int n) {
  const float32x4_t av = vdupq_n_f32(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t yv = vld1q_f32(y + i);
    yv = vfmaq_f32(yv, av, vld1q_f32(x + i));
    vst1q_f32(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(double alpha, const double* x, double* y, int n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  int i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t yv = vld1q_f64(y + i);
    yv = vfmaq_f64(yv, av, vld1q_f64(x + i));
    vst1q_f64(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_f32(const float* x, float alpha, float* y, int n) {
  const float32x4_t av = vdupq_n_f32(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vmulq_f32(av, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] = alpha * x[i];
}

void scale_f64(const double* x, double alpha, double* y, int n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  int i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vmulq_f64(av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = alpha * x[i];
}

float dot_f32(const float* a, const float* b, int n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
  float s = vaddvq_f32(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot_f64(const double* a, const double* b, int n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

float sum_f32(const float* x, int n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  int i = 0;
  for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
  float s = vaddvq_f32(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_f64(const double* x, int n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

}  // namespace simd
}  // namespace kernels
}  // namespace speechchain
