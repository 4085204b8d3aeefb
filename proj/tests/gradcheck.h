// tests/gradcheck.h
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

#ifndef SPEECHCHAIN_TESTS_GRADCHECK_H_
#define SPEECHCHAIN_TESTS_GRADCHECK_H_

// Central-finite-difference gradient oracle, independent of the backward
// pass it checks: it only ever calls forward evaluations of a loss builder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "core/rng.h"
#include "core/tensor.h"

namespace speechchain {
namespace testing {

inline double grad_rel_error(double analytic, double numeric,
                             double floor = 1e-6) {
  const double denom =
      std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

// Checks d(loss)/d(param) for every listed parameter coordinate (or a random
// subset of `sample_coords` per tensor when positive). `make_loss` must build
// a fresh graph from the current parameter values on every call. Returns the
// max relative error between backward() and the central difference
// (f(x+h) - f(x-h)) / 2h.
//
// A coordinate whose first difference disagrees is re-measured at h/8 and
// 8h and scored by its best step. That absorbs the two failure modes of the
// difference itself (a kink inside [x-h, x+h]; rounding noise on a flat
// coordinate) while a wrong backward pass stays wrong at every step size.
// `floor` is the denominator floor of the relative error: coordinates with
// gradients below it are compared absolutely against floor.
inline double max_grad_rel_error(
    std::vector<ag::Tensor<double>> params,
    const std::function<ag::Tensor<double>()>& make_loss,
    int sample_coords = -1, Rng* rng = nullptr, double h_scale = 1e-5,
    double floor = 1e-6) {
  for (auto& p : params) p.zero_grad();
  ag::Tensor<double> loss = make_loss();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    std::vector<size_t> coords;
    if (sample_coords > 0 && rng != nullptr &&
        p.numel() > static_cast<size_t>(sample_coords)) {
      for (int k = 0; k < sample_coords; ++k)
        coords.push_back(static_cast<size_t>(rng->randint(p.numel())));
    } else {
      coords.resize(p.numel());
      for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    }
    for (size_t ci : coords) {
      double* slot = &p.mutable_value()[ci];
      const double orig = *slot;
      auto numeric_at = [&](double h) {
        ag::NoGradGuard ng;
        *slot = orig + h;
        const double fp = make_loss().item();
        *slot = orig - h;
        const double fm = make_loss().item();
        *slot = orig;
        return (fp - fm) / (2.0 * h);
      };
      const double h = h_scale * std::max(1.0, std::fabs(orig));
      double err = grad_rel_error(analytic[pi][ci], numeric_at(h), floor);
      if (err > 1e-6) {
        for (double h2 : {h / 8.0, 8.0 * h})
          err = std::min(
              err, grad_rel_error(analytic[pi][ci], numeric_at(h2), floor));
      }
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

inline ag::Tensor<double> random_tensor(int rows, int cols, Rng* rng,
                                        double lo = -1.0, double hi = 1.0,
                                        bool requires_grad = true) {
  std::vector<double> data(static_cast<size_t>(rows) * cols);
  for (auto& v : data) v = rng->uniform(lo, hi);
  return ag::Tensor<double>::from(std::move(data), rows, cols, requires_grad);
}

}  // namespace testing
}  // namespace speechchain

#endif  // SPEECHCHAIN_TESTS_GRADCHECK_H_
