// core/optim.h
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

#ifndef SPEECHCHAIN_CORE_OPTIM_H_
#define SPEECHCHAIN_CORE_OPTIM_H_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "core/nn.h"
#include "core/tensor.h"

namespace speechchain {
namespace optim {

using ag::Tensor;

// Adam with bias correction. Moments are stored per parameter in the order
// the optimizer was constructed with; callers keep that order stable.
template <typename T>
struct AdamState {
  struct Slot {
    std::vector<T> first_moment;
    std::vector<T> second_moment;
  };

  std::vector<Slot> slots;
  int64_t step_count = 0;
  T lr = T(5e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);

  void init(const std::vector<Tensor<T>>& params) {
    slots.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      slots[i].first_moment.assign(params[i].numel(), T(0));
      slots[i].second_moment.assign(params[i].numel(), T(0));
    }
  }
};

// One bias-corrected Adam update from the accumulated grads. Grads are left
// untouched; the caller zeroes them.
template <typename T>
void adam_step(std::vector<Tensor<T>>* params, AdamState<T>* state) {
  if (state->slots.size() != params->size())
    throw std::invalid_argument("adam_step: state/parameter count mismatch");
  state->step_count += 1;
  const T bc1 = T(1) - std::pow(state->beta1, static_cast<T>(state->step_count));
  const T bc2 = T(1) - std::pow(state->beta2, static_cast<T>(state->step_count));
  for (size_t p = 0; p < params->size(); ++p) {
    Tensor<T>& param = (*params)[p];
    auto& slot = state->slots[p];
    if (slot.first_moment.size() != param.numel())
      throw std::invalid_argument("adam_step: state/parameter shape mismatch");
    const std::vector<T>& g = param.grad();
    T* value = param.mutable_data();
    for (size_t i = 0; i < g.size(); ++i) {
      slot.first_moment[i] =
          state->beta1 * slot.first_moment[i] + (T(1) - state->beta1) * g[i];
      slot.second_moment[i] = state->beta2 * slot.second_moment[i] +
                              (T(1) - state->beta2) * g[i] * g[i];
      const T mhat = slot.first_moment[i] / bc1;
      const T vhat = slot.second_moment[i] / bc2;
      value[i] -= state->lr * mhat / (std::sqrt(vhat) + state->epsilon);
    }
  }
}

template <typename T>
T global_grad_norm(const std::vector<Tensor<T>>& params) {
  double acc = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) acc += static_cast<double>(g) * static_cast<double>(g);
  }
  return static_cast<T>(std::sqrt(acc));
}

// Rescales all grads so the global L2 norm is at most max_norm.
template <typename T>
void clip_grad_norm(std::vector<Tensor<T>>* params, T max_norm) {
  const T norm = global_grad_norm(*params);
  if (norm <= max_norm || norm == T(0)) return;
  const T factor = max_norm / norm;
  for (auto& p : *params) {
    if (!p.has_grad()) continue;
    auto& g = p.mutable_grad();
    kernels::scale(g.data(), factor, g.data(), static_cast<int>(g.size()));
  }
}

template <typename T>
void zero_grads(std::vector<Tensor<T>>* params) {
  for (auto& p : *params) p.zero_grad();
}

template <typename T>
std::vector<Tensor<T>> tensors_of(const nn::ParamList<T>& named) {
  std::vector<Tensor<T>> out;
  out.reserve(named.size());
  for (const auto& nt : named) out.push_back(nt.tensor);
  return out;
}

}  // namespace optim
}  // namespace speechchain

#endif  // SPEECHCHAIN_CORE_OPTIM_H_
