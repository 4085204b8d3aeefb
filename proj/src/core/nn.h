// core/nn.h
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

#ifndef SPEECHCHAIN_CORE_NN_H_
#define SPEECHCHAIN_CORE_NN_H_

#include <string>
#include <vector>

#include "core/rng.h"
#include "core/tensor.h"

namespace speechchain {
namespace nn {

using ag::Tensor;

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParamList = std::vector<NamedTensor<T>>;

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], the init every layer uses.
template <typename T>
Tensor<T> init_uniform(int rows, int cols, int fan_in, Rng* rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> data(static_cast<size_t>(rows) * cols);
  for (auto& v : data) v = static_cast<T>(rng->uniform(-bound, bound));
  return Tensor<T>::from(std::move(data), rows, cols, true);
}

template <typename T>
struct Linear {
  Tensor<T> w;  // [in x out]
  Tensor<T> b;  // [1 x out], undefined when bias-less

  Linear() = default;
  Linear(int in, int out, Rng* rng, bool bias = true) {
    w = init_uniform<T>(in, out, in, rng);
    if (bias) b = init_uniform<T>(1, out, in, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y = ag::matmul(x, w);
    if (b.defined()) y = ag::add_rowwise(y, b);
    return y;
  }

  void collect(const std::string& prefix, ParamList<T>* out) {
    out->push_back({prefix + ".w", w});
    if (b.defined()) out->push_back({prefix + ".b", b});
  }
};

// Fused-gate LSTM cell; gate order along the weight columns is
// input, forget, candidate, output.
template <typename T>
struct LstmCell {
  Tensor<T> w;  // [(in+hidden) x 4*hidden]
  Tensor<T> b;  // [1 x 4*hidden]
  int hidden = 0;

  struct State {
    Tensor<T> h;
    Tensor<T> c;
  };

  LstmCell() = default;
  LstmCell(int in, int hid, Rng* rng) : hidden(hid) {
    w = init_uniform<T>(in + hid, 4 * hid, in + hid, rng);
    b = init_uniform<T>(1, 4 * hid, in + hid, rng);
  }

  State initial_state() const {
    return {Tensor<T>::zeros(1, hidden), Tensor<T>::zeros(1, hidden)};
  }

  State step(const Tensor<T>& x, const State& s) const {
    if (x.cols() + hidden != w.rows())
      throw std::invalid_argument("LstmCell: input width does not match weights");
    Tensor<T> gates = ag::add_rowwise(ag::matmul(ag::concat_cols<T>({x, s.h}), w), b);
    Tensor<T> i = ag::sigmoid(ag::slice_cols(gates, 0, hidden));
    Tensor<T> f = ag::sigmoid(ag::slice_cols(gates, hidden, hidden));
    Tensor<T> g = ag::tanh(ag::slice_cols(gates, 2 * hidden, hidden));
    Tensor<T> o = ag::sigmoid(ag::slice_cols(gates, 3 * hidden, hidden));
    Tensor<T> c = ag::add(ag::mul(f, s.c), ag::mul(i, g));
    Tensor<T> h = ag::mul(o, ag::tanh(c));
    return {h, c};
  }

  void collect(const std::string& prefix, ParamList<T>* out) {
    out->push_back({prefix + ".w", w});
    out->push_back({prefix + ".b", b});
  }
};

template <typename T>
struct GruCell {
  Tensor<T> w_rz;  // [(in+hidden) x 2*hidden], reset | update
  Tensor<T> b_rz;
  Tensor<T> w_h;   // [(in+hidden) x hidden]
  Tensor<T> b_h;
  int hidden = 0;

  GruCell() = default;
  GruCell(int in, int hid, Rng* rng) : hidden(hid) {
    w_rz = init_uniform<T>(in + hid, 2 * hid, in + hid, rng);
    b_rz = init_uniform<T>(1, 2 * hid, in + hid, rng);
    w_h = init_uniform<T>(in + hid, hid, in + hid, rng);
    b_h = init_uniform<T>(1, hid, in + hid, rng);
  }

  Tensor<T> initial_state() const { return Tensor<T>::zeros(1, hidden); }

  Tensor<T> step(const Tensor<T>& x, const Tensor<T>& h) const {
    Tensor<T> rz = ag::sigmoid(
        ag::add_rowwise(ag::matmul(ag::concat_cols<T>({x, h}), w_rz), b_rz));
    Tensor<T> r = ag::slice_cols(rz, 0, hidden);
    Tensor<T> z = ag::slice_cols(rz, hidden, hidden);
    Tensor<T> cand = ag::tanh(ag::add_rowwise(
        ag::matmul(ag::concat_cols<T>({x, ag::mul(r, h)}), w_h), b_h));
    return ag::add(ag::mul(z, h), ag::mul(ag::one_minus(z), cand));
  }

  void collect(const std::string& prefix, ParamList<T>* out) {
    out->push_back({prefix + ".w_rz", w_rz});
    out->push_back({prefix + ".b_rz", b_rz});
    out->push_back({prefix + ".w_h", w_h});
    out->push_back({prefix + ".b_h", b_h});
  }
};

// Runs a recurrent cell over a [T x in] sequence, returning [T x hidden].
template <typename T>
Tensor<T> run_lstm(const LstmCell<T>& cell, const Tensor<T>& xs,
                   bool reverse = false) {
  const int t = xs.rows();
  typename LstmCell<T>::State s = cell.initial_state();
  std::vector<Tensor<T>> hs(t);
  for (int step = 0; step < t; ++step) {
    const int idx = reverse ? t - 1 - step : step;
    s = cell.step(ag::row(xs, idx), s);
    hs[idx] = s.h;
  }
  return ag::concat_rows(hs);
}

template <typename T>
Tensor<T> run_bilstm(const LstmCell<T>& fwd, const LstmCell<T>& bwd,
                     const Tensor<T>& xs) {
  return ag::concat_cols<T>({run_lstm(fwd, xs, false), run_lstm(bwd, xs, true)});
}

template <typename T>
Tensor<T> run_gru(const GruCell<T>& cell, const Tensor<T>& xs,
                  bool reverse = false) {
  const int t = xs.rows();
  Tensor<T> h = cell.initial_state();
  std::vector<Tensor<T>> hs(t);
  for (int step = 0; step < t; ++step) {
    const int idx = reverse ? t - 1 - step : step;
    h = cell.step(ag::row(xs, idx), h);
    hs[idx] = h;
  }
  return ag::concat_rows(hs);
}

template <typename T>
Tensor<T> run_bigru(const GruCell<T>& fwd, const GruCell<T>& bwd,
                    const Tensor<T>& xs) {
  return ag::concat_cols<T>({run_gru(fwd, xs, false), run_gru(bwd, xs, true)});
}

// 1-D convolution over time via im2col. Output rows: ceil(T/stride)
// ('same'-style zero padding centred on the window).
template <typename T>
struct Conv1d {
  Tensor<T> w;  // [kw*in x out]
  Tensor<T> b;  // [1 x out]
  int kw = 1;
  int stride = 1;

  Conv1d() = default;
  Conv1d(int in, int out, int kernel_width, int stride_, Rng* rng)
      : kw(kernel_width), stride(stride_) {
    w = init_uniform<T>(kernel_width * in, out, kernel_width * in, rng);
    b = init_uniform<T>(1, out, kernel_width * in, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    const int pad_left = (kw - 1) / 2;
    const int pad_right = kw - 1 - pad_left;
    Tensor<T> patches = ag::im2col(x, kw, stride, pad_left, pad_right);
    return ag::add_rowwise(ag::matmul(patches, w), b);
  }

  void collect(const std::string& prefix, ParamList<T>* out) {
    out->push_back({prefix + ".w", w});
    out->push_back({prefix + ".b", b});
  }
};

template <typename T>
struct Highway {
  Linear<T> transform;  // H
  Linear<T> gate;       // T

  Highway() = default;
  Highway(int dim, Rng* rng) : transform(dim, dim, rng), gate(dim, dim, rng) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> h = ag::lrelu(transform.forward(x));
    Tensor<T> t = ag::sigmoid(gate.forward(x));
    return ag::add(ag::mul(t, h), ag::mul(ag::one_minus(t), x));
  }

  void collect(const std::string& prefix, ParamList<T>* out) {
    transform.collect(prefix + ".h", out);
    gate.collect(prefix + ".t", out);
  }
};

}  // namespace nn
}  // namespace speechchain

#endif  // SPEECHCHAIN_CORE_NN_H_
