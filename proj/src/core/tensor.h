// core/tensor.h
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

#ifndef SPEECHCHAIN_CORE_TENSOR_H_
#define SPEECHCHAIN_CORE_TENSOR_H_

// Reverse-mode automatic differentiation over row-major 2-D tensors.
// Each op builds a fresh node on a dynamic per-step graph; backward() walks
// the graph from a scalar loss in reverse topological order and accumulates
// gradients additively into every reachable node that needs them. Ops never
// mutate their inputs.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "core/kernels.h"

namespace speechchain {
namespace ag {

template <typename T>
class Tensor;

template <typename T>
struct TensorImpl {
  int rows = 0;
  int cols = 0;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool needs_grad = false;
  bool is_leaf = true;
  std::vector<Tensor<T>> parents;
  std::function<void(TensorImpl<T>&)> backward_fn;

  size_t numel() const { return value.size(); }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

namespace detail {
inline thread_local bool grad_enabled = true;
}

// Disables graph construction in scope (decoding, corpus evaluation, ...).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool grad_enabled() { return detail::grad_enabled; }

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false) {
    return filled(rows, cols, T(0), requires_grad);
  }

  static Tensor filled(int rows, int cols, T v, bool requires_grad = false) {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->rows = rows;
    t.impl_->cols = cols;
    t.impl_->value.assign(static_cast<size_t>(rows) * cols, v);
    t.impl_->needs_grad = requires_grad && detail::grad_enabled;
    return t;
  }

  static Tensor from(std::vector<T> data, int rows, int cols,
                     bool requires_grad = false) {
    if (data.size() != static_cast<size_t>(rows) * cols)
      throw std::invalid_argument("tensor data length does not match shape");
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->rows = rows;
    t.impl_->cols = cols;
    t.impl_->value = std::move(data);
    t.impl_->needs_grad = requires_grad && detail::grad_enabled;
    return t;
  }

  static Tensor scalar(T v, bool requires_grad = false) {
    return from({v}, 1, 1, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  int rows() const { return impl_->rows; }
  int cols() const { return impl_->cols; }
  size_t numel() const { return impl_->numel(); }

  const std::vector<T>& value() const { return impl_->value; }
  std::vector<T>& mutable_value() { return impl_->value; }
  const T* data() const { return impl_->value.data(); }
  T* mutable_data() { return impl_->value.data(); }

  T at(int r, int c) const {
    return impl_->value[static_cast<size_t>(r) * impl_->cols + c];
  }
  T item() const {
    if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor");
    return impl_->value[0];
  }

  bool needs_grad() const { return impl_ && impl_->needs_grad; }
  void set_requires_grad(bool rg) {
    impl_->needs_grad = rg;
    if (!rg) impl_->grad.clear();
  }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  const std::vector<T>& grad() const {
    if (impl_->grad.empty())
      const_cast<TensorImpl<T>*>(impl_.get())->ensure_grad();
    return impl_->grad;
  }
  std::vector<T>& mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    impl_->ensure_grad();
    std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  // A leaf tensor sharing no graph history; value is copied.
  Tensor detach() const {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->rows = impl_->rows;
    t.impl_->cols = impl_->cols;
    t.impl_->value = impl_->value;
    return t;
  }

  // Reverse pass from a scalar. Gradients of reachable tensors accumulate
  // additively; this tensor's own grad seeds at 1.
  void backward() const {
    if (numel() != 1)
      throw std::invalid_argument("backward() requires a scalar loss tensor");
    std::vector<TensorImpl<T>*> order = topo_order();
    impl_->ensure_grad();
    impl_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      TensorImpl<T>* node = *it;
      if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
    }
  }

  TensorImpl<T>* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl<T>>& impl_ptr() const { return impl_; }

  static Tensor wrap(std::shared_ptr<TensorImpl<T>> impl) {
    Tensor t;
    t.impl_ = std::move(impl);
    return t;
  }

 private:
  // Iterative DFS post-order; recursion would overflow on long recurrences.
  std::vector<TensorImpl<T>*> topo_order() const {
    std::vector<TensorImpl<T>*> order;
    std::unordered_set<TensorImpl<T>*> visited;
    struct Frame {
      TensorImpl<T>* node;
      size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({impl_.get(), 0});
    visited.insert(impl_.get());
    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next_parent < top.node->parents.size()) {
        TensorImpl<T>* p = top.node->parents[top.next_parent++].impl();
        if (visited.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(top.node);
        stack.pop_back();
      }
    }
    return order;
  }

  std::shared_ptr<TensorImpl<T>> impl_;
};

namespace detail {

template <typename T>
Tensor<T> make_node(int rows, int cols, std::vector<T> value,
                    std::vector<Tensor<T>> parents,
                    std::function<void(TensorImpl<T>&)> backward_fn) {
  bool track = grad_enabled;
  if (track) {
    track = false;
    for (const auto& p : parents)
      if (p.needs_grad()) {
        track = true;
        break;
      }
  }
  Tensor<T> t = Tensor<T>::from(std::move(value), rows, cols, false);
  if (track) {
    t.impl()->needs_grad = true;
    t.impl()->is_leaf = false;
    t.impl()->parents = std::move(parents);
    t.impl()->backward_fn = std::move(backward_fn);
  }
  return t;
}

// Accumulates g (same shape) into p's grad buffer if p participates.
template <typename T>
void accum(const Tensor<T>& p, const T* g, size_t n) {
  if (!p.needs_grad()) return;
  p.impl()->ensure_grad();
  kernels::add(p.impl()->grad.data(), g, p.impl()->grad.data(),
               static_cast<int>(n));
}

template <typename T>
T* grad_sink(const Tensor<T>& p) {
  if (!p.needs_grad()) return nullptr;
  p.impl()->ensure_grad();
  return p.impl()->grad.data();
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  kernels::add(a.data(), b.data(), out.data(), n);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a, b},
      [a, b](TensorImpl<T>& self) {
        detail::accum(a, self.grad.data(), self.numel());
        detail::accum(b, self.grad.data(), self.numel());
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  kernels::sub(a.data(), b.data(), out.data(), n);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a, b},
      [a, b](TensorImpl<T>& self) {
        detail::accum(a, self.grad.data(), self.numel());
        if (T* gb = detail::grad_sink(b))
          kernels::axpy(T(-1), self.grad.data(), gb,
                        static_cast<int>(self.numel()));
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  kernels::mul(a.data(), b.data(), out.data(), n);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a, b},
      [a, b, n](TensorImpl<T>& self) {
        std::vector<T> tmp(n);
        if (T* ga = detail::grad_sink(a)) {
          kernels::mul(self.grad.data(), b.data(), tmp.data(), n);
          kernels::add(ga, tmp.data(), ga, n);
        }
        if (T* gb = detail::grad_sink(b)) {
          kernels::mul(self.grad.data(), a.data(), tmp.data(), n);
          kernels::add(gb, tmp.data(), gb, n);
        }
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  kernels::scale(a.data(), c, out.data(), n);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, c](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a))
          kernels::axpy(c, self.grad.data(), ga,
                        static_cast<int>(self.numel()));
      });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = a.data()[i] + c;
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a](TensorImpl<T>& self) {
        detail::accum(a, self.grad.data(), self.numel());
      });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return scale(a, T(-1));
}

// y[i,:] = m[i,:] + v[0,:]
template <typename T>
Tensor<T> add_rowwise(const Tensor<T>& m, const Tensor<T>& v) {
  if (v.rows() != 1 || v.cols() != m.cols())
    throw std::invalid_argument("add_rowwise: bias must be [1 x cols]");
  const int r = m.rows(), c = m.cols();
  std::vector<T> out(m.numel());
  for (int i = 0; i < r; ++i)
    kernels::add(m.data() + static_cast<size_t>(i) * c, v.data(),
                 out.data() + static_cast<size_t>(i) * c, c);
  return detail::make_node<T>(
      r, c, std::move(out), {m, v},
      [m, v, r, c](TensorImpl<T>& self) {
        detail::accum(m, self.grad.data(), self.numel());
        if (T* gv = detail::grad_sink(v)) {
          for (int i = 0; i < r; ++i)
            kernels::add(gv, self.grad.data() + static_cast<size_t>(i) * c, gv, c);
        }
      });
}

// y[i,:] = w[i] * m[i,:] with constant per-row weights (loss masks).
template <typename T>
Tensor<T> scale_rows(const Tensor<T>& m, std::vector<T> w) {
  if (static_cast<int>(w.size()) != m.rows())
    throw std::invalid_argument("scale_rows: weight length must equal rows");
  const int r = m.rows(), c = m.cols();
  std::vector<T> out(m.numel());
  for (int i = 0; i < r; ++i)
    kernels::scale(m.data() + static_cast<size_t>(i) * c, w[i],
                   out.data() + static_cast<size_t>(i) * c, c);
  return detail::make_node<T>(
      r, c, std::move(out), {m},
      [m, w = std::move(w), r, c](TensorImpl<T>& self) {
        if (T* gm = detail::grad_sink(m)) {
          for (int i = 0; i < r; ++i)
            kernels::axpy(w[i], self.grad.data() + static_cast<size_t>(i) * c,
                          gm + static_cast<size_t>(i) * c, c);
        }
      });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument(
        "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
        " vs " + std::to_string(b.rows()) + ")");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<T> out(static_cast<size_t>(m) * n);
  kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
  return detail::make_node<T>(
      m, n, std::move(out), {a, b},
      [a, b, m, k, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          // dA += G * B^T
          std::vector<T> bt(static_cast<size_t>(n) * k);
          kernels::transpose(b.data(), bt.data(), k, n);
          kernels::matmul_acc(self.grad.data(), bt.data(), ga, m, n, k);
        }
        if (T* gb = detail::grad_sink(b)) {
          // dB += A^T * G
          std::vector<T> at(static_cast<size_t>(k) * m);
          kernels::transpose(a.data(), at.data(), m, k);
          kernels::matmul_acc(at.data(), self.grad.data(), gb, k, m, n);
        }
      });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<T> out(a.numel());
  kernels::transpose(a.data(), out.data(), r, c);
  return detail::make_node<T>(
      c, r, std::move(out), {a},
      [a, r, c](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          std::vector<T> gt(self.numel());
          kernels::transpose(self.grad.data(), gt.data(), c, r);
          kernels::add(ga, gt.data(), ga, static_cast<int>(self.numel()));
        }
      });
}

// ---------------------------------------------------------------------------
// Nonlinearities

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = T(1) / (T(1) + std::exp(-a.data()[i]));
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i) {
            const T s = self.value[i];
            ga[i] += self.grad[i] * s * (T(1) - s);
          }
        }
      });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::tanh(a.data()[i]);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i) {
            const T t = self.value[i];
            ga[i] += self.grad[i] * (T(1) - t * t);
          }
        }
      });
}

template <typename T>
Tensor<T> lrelu(const Tensor<T>& a, T slope = T(0.01)) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) {
    const T x = a.data()[i];
    out[i] = x > T(0) ? x : slope * x;
  }
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, slope, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i)
            ga[i] += self.grad[i] * (a.data()[i] > T(0) ? T(1) : slope);
        }
      });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a.data()[i]);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i) ga[i] += self.grad[i] * self.value[i];
        }
      });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::log(a.data()[i]);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i) ga[i] += self.grad[i] / a.data()[i];
        }
      });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::sqrt(a.data()[i]);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i)
            ga[i] += self.grad[i] / (T(2) * self.value[i]);
        }
      });
}

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(a.data()[i], lo);
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, lo, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i)
            if (a.data()[i] > lo) ga[i] += self.grad[i];
        }
      });
}

// Max-stabilized softmax along each row.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<T> out(a.numel());
  for (int i = 0; i < r; ++i) {
    const T* x = a.data() + static_cast<size_t>(i) * c;
    T* y = out.data() + static_cast<size_t>(i) * c;
    T mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    T z = T(0);
    for (int j = 0; j < c; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    const T inv = T(1) / z;
    for (int j = 0; j < c; ++j) y[j] *= inv;
  }
  return detail::make_node<T>(
      r, c, std::move(out), {a},
      [a, r, c](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < r; ++i) {
            const T* y = self.value.data() + static_cast<size_t>(i) * c;
            const T* g = self.grad.data() + static_cast<size_t>(i) * c;
            T* gx = ga + static_cast<size_t>(i) * c;
            const T gy = kernels::dot(g, y, c);
            for (int j = 0; j < c; ++j) gx[j] += y[j] * (g[j] - gy);
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  const T s = kernels::sum(a.data(), n);
  return detail::make_node<T>(
      1, 1, {s}, {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          const T g = self.grad[0];
          for (int i = 0; i < n; ++i) ga[i] += g;
        }
      });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  const int r = parts[0].rows();
  int c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r)
      throw std::invalid_argument("concat_cols: row counts differ");
    c += p.cols();
  }
  std::vector<T> out(static_cast<size_t>(r) * c);
  int off = 0;
  for (const auto& p : parts) {
    const int pc = p.cols();
    for (int i = 0; i < r; ++i)
      std::memcpy(out.data() + static_cast<size_t>(i) * c + off,
                  p.data() + static_cast<size_t>(i) * pc, sizeof(T) * pc);
    off += pc;
  }
  return detail::make_node<T>(
      r, c, std::move(out), parts,
      [parts, r, c](TensorImpl<T>& self) {
        int off2 = 0;
        for (const auto& p : parts) {
          const int pc = p.cols();
          if (T* gp = detail::grad_sink(p)) {
            for (int i = 0; i < r; ++i)
              kernels::add(gp + static_cast<size_t>(i) * pc,
                           self.grad.data() + static_cast<size_t>(i) * c + off2,
                           gp + static_cast<size_t>(i) * pc, pc);
          }
          off2 += pc;
        }
      });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
  const int c = parts[0].cols();
  int r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c)
      throw std::invalid_argument("concat_rows: column counts differ");
    r += p.rows();
  }
  std::vector<T> out;
  out.reserve(static_cast<size_t>(r) * c);
  for (const auto& p : parts)
    out.insert(out.end(), p.value().begin(), p.value().end());
  return detail::make_node<T>(
      r, c, std::move(out), parts,
      [parts, c](TensorImpl<T>& self) {
        size_t off = 0;
        for (const auto& p : parts) {
          const size_t pn = p.numel();
          if (T* gp = detail::grad_sink(p))
            kernels::add(gp, self.grad.data() + off, gp, static_cast<int>(pn));
          off += pn;
        }
      });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, int c0, int len) {
  if (c0 < 0 || len <= 0 || c0 + len > a.cols())
    throw std::invalid_argument("slice_cols: range out of bounds");
  const int r = a.rows(), c = a.cols();
  std::vector<T> out(static_cast<size_t>(r) * len);
  for (int i = 0; i < r; ++i)
    std::memcpy(out.data() + static_cast<size_t>(i) * len,
                a.data() + static_cast<size_t>(i) * c + c0, sizeof(T) * len);
  return detail::make_node<T>(
      r, len, std::move(out), {a},
      [a, c0, len, r, c](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < r; ++i)
            kernels::add(ga + static_cast<size_t>(i) * c + c0,
                         self.grad.data() + static_cast<size_t>(i) * len,
                         ga + static_cast<size_t>(i) * c + c0, len);
        }
      });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, int r0, int len) {
  if (r0 < 0 || len <= 0 || r0 + len > a.rows())
    throw std::invalid_argument("slice_rows: range out of bounds");
  const int c = a.cols();
  std::vector<T> out(a.value().begin() + static_cast<size_t>(r0) * c,
                     a.value().begin() + static_cast<size_t>(r0 + len) * c);
  return detail::make_node<T>(
      len, c, std::move(out), {a},
      [a, r0, len, c](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a))
          kernels::add(ga + static_cast<size_t>(r0) * c, self.grad.data(),
                       ga + static_cast<size_t>(r0) * c, len * c);
      });
}

template <typename T>
Tensor<T> row(const Tensor<T>& a, int r) {
  return slice_rows(a, r, 1);
}

// Embedding lookup: out[t,:] = table[ids[t],:]; scatter-add backward.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::vector<int> ids) {
  const int c = table.cols();
  const int t = static_cast<int>(ids.size());
  std::vector<T> out(static_cast<size_t>(t) * c);
  for (int i = 0; i < t; ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows())
      throw std::out_of_range("gather_rows: id out of range");
    std::memcpy(out.data() + static_cast<size_t>(i) * c,
                table.data() + static_cast<size_t>(ids[i]) * c, sizeof(T) * c);
  }
  return detail::make_node<T>(
      t, c, std::move(out), {table},
      [table, ids = std::move(ids), c](TensorImpl<T>& self) {
        if (T* gt = detail::grad_sink(table)) {
          for (size_t i = 0; i < ids.size(); ++i)
            kernels::add(gt + static_cast<size_t>(ids[i]) * c,
                         self.grad.data() + i * c,
                         gt + static_cast<size_t>(ids[i]) * c, c);
        }
      });
}

// out[0,t] = m[t, ids[t]] — picks one probability per row.
template <typename T>
Tensor<T> pick(const Tensor<T>& m, std::vector<int> ids) {
  if (static_cast<int>(ids.size()) != m.rows())
    throw std::invalid_argument("pick: need one column id per row");
  const int c = m.cols();
  const int t = static_cast<int>(ids.size());
  std::vector<T> out(t);
  for (int i = 0; i < t; ++i) {
    if (ids[i] < 0 || ids[i] >= c)
      throw std::out_of_range("pick: id out of range");
    out[i] = m.data()[static_cast<size_t>(i) * c + ids[i]];
  }
  return detail::make_node<T>(
      1, t, std::move(out), {m},
      [m, ids = std::move(ids), c](TensorImpl<T>& self) {
        if (T* gm = detail::grad_sink(m)) {
          for (size_t i = 0; i < ids.size(); ++i)
            gm[i * c + ids[i]] += self.grad[i];
        }
      });
}

// Unfolds [T x C] into [T_out x (kw*C)] patches for width-kw convolution
// over time (zero padding outside).
template <typename T>
Tensor<T> im2col(const Tensor<T>& x, int kw, int stride, int pad_left,
                 int pad_right) {
  const int tin = x.rows(), c = x.cols();
  const int span = tin + pad_left + pad_right;
  if (kw <= 0 || stride <= 0 || span < kw)
    throw std::invalid_argument("im2col: invalid window");
  const int tout = (span - kw) / stride + 1;
  std::vector<T> out(static_cast<size_t>(tout) * kw * c, T(0));
  for (int to = 0; to < tout; ++to) {
    for (int j = 0; j < kw; ++j) {
      const int ti = to * stride - pad_left + j;
      if (ti < 0 || ti >= tin) continue;
      std::memcpy(out.data() + (static_cast<size_t>(to) * kw + j) * c,
                  x.data() + static_cast<size_t>(ti) * c, sizeof(T) * c);
    }
  }
  return detail::make_node<T>(
      tout, kw * c, std::move(out), {x},
      [x, kw, stride, pad_left, tin, c, tout](TensorImpl<T>& self) {
        if (T* gx = detail::grad_sink(x)) {
          for (int to = 0; to < tout; ++to) {
            for (int j = 0; j < kw; ++j) {
              const int ti = to * stride - pad_left + j;
              if (ti < 0 || ti >= tin) continue;
              kernels::add(gx + static_cast<size_t>(ti) * c,
                           self.grad.data() + (static_cast<size_t>(to) * kw + j) * c,
                           gx + static_cast<size_t>(ti) * c, c);
            }
          }
        }
      });
}

// Max over a width-`kw` window starting at each row (stride 1, length
// preserved, missing tail treated as -inf).
template <typename T>
Tensor<T> maxpool_time(const Tensor<T>& x, int kw) {
  const int t = x.rows(), c = x.cols();
  std::vector<T> out(x.numel());
  auto argmax = std::make_shared<std::vector<int>>(x.numel());
  for (int i = 0; i < t; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      T best = -std::numeric_limits<T>::infinity();
      int bi = i;
      for (int j = 0; j < kw && i + j < t; ++j) {
        const T v = x.data()[static_cast<size_t>(i + j) * c + ch];
        if (v > best) {
          best = v;
          bi = i + j;
        }
      }
      out[static_cast<size_t>(i) * c + ch] = best;
      (*argmax)[static_cast<size_t>(i) * c + ch] = bi;
    }
  }
  return detail::make_node<T>(
      t, c, std::move(out), {x},
      [x, argmax, t, c](TensorImpl<T>& self) {
        if (T* gx = detail::grad_sink(x)) {
          for (int i = 0; i < t; ++i)
            for (int ch = 0; ch < c; ++ch)
              gx[static_cast<size_t>((*argmax)[static_cast<size_t>(i) * c + ch]) * c + ch] +=
                  self.grad[static_cast<size_t>(i) * c + ch];
        }
      });
}

// y = s * m where s is a [1x1] tensor.
template <typename T>
Tensor<T> mul_scalar_t(const Tensor<T>& m, const Tensor<T>& s) {
  if (s.numel() != 1)
    throw std::invalid_argument("mul_scalar_t: scale must be scalar");
  const int n = static_cast<int>(m.numel());
  std::vector<T> out(n);
  kernels::scale(m.data(), s.item(), out.data(), n);
  return detail::make_node<T>(
      m.rows(), m.cols(), std::move(out), {m, s},
      [m, s, n](TensorImpl<T>& self) {
        if (T* gm = detail::grad_sink(m))
          kernels::axpy(s.item(), self.grad.data(), gm, n);
        if (T* gs = detail::grad_sink(s))
          gs[0] += kernels::dot(self.grad.data(), m.data(), n);
      });
}

// ---------------------------------------------------------------------------
// Composites

template <typename T>
Tensor<T> one_minus(const Tensor<T>& a) {
  return add_scalar(neg(a), T(1));
}

template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  return sum(mul(a, b));
}

template <typename T>
Tensor<T> sum_squares(const Tensor<T>& a) {
  return sum(mul(a, a));
}

template <typename T>
Tensor<T> recip(const Tensor<T>& a) {
  const int n = static_cast<int>(a.numel());
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = T(1) / a.data()[i];
  return detail::make_node<T>(
      a.rows(), a.cols(), std::move(out), {a},
      [a, n](TensorImpl<T>& self) {
        if (T* ga = detail::grad_sink(a)) {
          for (int i = 0; i < n; ++i)
            ga[i] -= self.grad[i] * self.value[i] * self.value[i];
        }
      });
}

// x / ||x||_2, guarded against zero vectors.
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x, T eps = T(1e-12)) {
  Tensor<T> n = sqrt(add_scalar(sum_squares(x), eps));
  return mul_scalar_t(x, recip(n));
}

// cos(a, b) = <a,b> / (||a|| ||b||)
template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b,
                            T eps = T(1e-12)) {
  Tensor<T> num = dot(a, b);
  Tensor<T> na = sqrt(add_scalar(sum_squares(a), eps));
  Tensor<T> nb = sqrt(add_scalar(sum_squares(b), eps));
  return mul(num, recip(mul(na, nb)));
}

}  // namespace ag
}  // namespace speechchain

#endif  // SPEECHCHAIN_CORE_TENSOR_H_
