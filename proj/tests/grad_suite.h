// tests/grad_suite.h
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

#ifndef SPEECHCHAIN_TESTS_GRAD_SUITE_H_
#define SPEECHCHAIN_TESTS_GRAD_SUITE_H_

// Randomized finite-difference checks for every differentiable op in the
// tensor engine. Shared between the unit tests (few cases) and the
// acceptance suite (100 cases per op).

#include <functional>
#include <string>
#include <vector>

#include "gradcheck.h"

namespace speechchain {
namespace testing {

struct OpCheck {
  std::string name;
  // Runs one random case and returns the max relative gradient error.
  std::function<double(Rng*)> run_case;
};

inline std::vector<OpCheck> differentiable_op_checks() {
  using ag::Tensor;
  std::vector<OpCheck> checks;

  auto add_check = [&](const std::string& name,
                       std::function<double(Rng*)> fn) {
    checks.push_back({name, std::move(fn)});
  };

  auto dims = [](Rng* rng) {
    return std::pair<int, int>{1 + static_cast<int>(rng->randint(4)),
                               1 + static_cast<int>(rng->randint(5))};
  };

  add_check("add", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    auto b = random_tensor(r, c, rng);
    return max_grad_rel_error({a, b}, [&] {
      return ag::sum(ag::mul(ag::add(a, b), ag::add(a, b)));
    });
  });

  add_check("sub", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    auto b = random_tensor(r, c, rng);
    return max_grad_rel_error(
        {a, b}, [&] { return ag::sum_squares(ag::sub(a, b)); });
  });

  add_check("mul", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    auto b = random_tensor(r, c, rng);
    return max_grad_rel_error({a, b}, [&] { return ag::sum(ag::mul(a, b)); });
  });

  add_check("scale", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    const double k = rng->uniform(-2.0, 2.0);
    return max_grad_rel_error(
        {a}, [&] { return ag::sum_squares(ag::scale(a, k)); });
  });

  add_check("add_scalar", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    const double k = rng->uniform(-2.0, 2.0);
    return max_grad_rel_error(
        {a}, [&] { return ag::sum_squares(ag::add_scalar(a, k)); });
  });

  add_check("add_rowwise", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto m = random_tensor(r, c, rng);
    auto v = random_tensor(1, c, rng);
    return max_grad_rel_error(
        {m, v}, [&] { return ag::sum_squares(ag::add_rowwise(m, v)); });
  });

  add_check("scale_rows", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto m = random_tensor(r, c, rng);
    std::vector<double> w(r);
    for (auto& x : w) x = rng->uniform(-1.0, 1.0);
    return max_grad_rel_error(
        {m}, [&] { return ag::sum_squares(ag::scale_rows(m, w)); });
  });

  add_check("matmul", [](Rng* rng) {
    const int m = 1 + static_cast<int>(rng->randint(3));
    const int k = 1 + static_cast<int>(rng->randint(4));
    const int n = 1 + static_cast<int>(rng->randint(3));
    auto a = random_tensor(m, k, rng);
    auto b = random_tensor(k, n, rng);
    return max_grad_rel_error(
        {a, b}, [&] { return ag::sum_squares(ag::matmul(a, b)); });
  });

  add_check("transpose", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    auto b = random_tensor(c, r, rng);
    return max_grad_rel_error(
        {a, b}, [&] { return ag::sum(ag::mul(ag::transpose(a), b)); });
  });

  add_check("sigmoid", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, -3.0, 3.0);
    return max_grad_rel_error({a}, [&] { return ag::sum(ag::sigmoid(a)); });
  });

  add_check("tanh", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, -3.0, 3.0);
    return max_grad_rel_error({a}, [&] { return ag::sum(ag::tanh(a)); });
  });

  add_check("lrelu", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    // keep values away from the kink where the two-sided difference lies
    auto a = random_tensor(r, c, rng, 0.05, 1.0);
    auto b = random_tensor(r, c, rng, -1.0, -0.05);
    return max_grad_rel_error({a, b}, [&] {
      return ag::add(ag::sum(ag::lrelu(a)), ag::sum(ag::lrelu(b)));
    });
  });

  add_check("exp", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, -1.0, 1.0);
    return max_grad_rel_error({a}, [&] { return ag::sum(ag::exp(a)); });
  });

  add_check("log", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, 0.2, 2.0);
    return max_grad_rel_error({a}, [&] { return ag::sum(ag::log(a)); });
  });

  add_check("sqrt", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, 0.2, 2.0);
    return max_grad_rel_error({a}, [&] { return ag::sum(ag::sqrt(a)); });
  });

  add_check("recip", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, 0.3, 2.0);
    return max_grad_rel_error({a}, [&] { return ag::sum(ag::recip(a)); });
  });

  add_check("clamp_min", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    // stay away from the clamp point itself
    auto a = random_tensor(r, c, rng, 0.6, 2.0);
    auto b = random_tensor(r, c, rng, -2.0, 0.4);
    return max_grad_rel_error({a, b}, [&] {
      return ag::add(ag::sum(ag::clamp_min(a, 0.5)),
                     ag::sum(ag::clamp_min(b, 0.5)));
    });
  });

  add_check("softmax_rows", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng, -2.0, 2.0);
    auto w = random_tensor(r, c, rng);
    return max_grad_rel_error(
        {a, w}, [&] { return ag::sum(ag::mul(ag::softmax_rows(a), w)); });
  });

  add_check("sum", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    return max_grad_rel_error({a}, [&] { return ag::sum(a); });
  });

  add_check("mean", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto a = random_tensor(r, c, rng);
    return max_grad_rel_error({a}, [&] { return ag::mean(ag::mul(a, a)); });
  });

  add_check("concat_cols", [](Rng* rng) {
    const int r = 1 + static_cast<int>(rng->randint(3));
    auto a = random_tensor(r, 1 + static_cast<int>(rng->randint(3)), rng);
    auto b = random_tensor(r, 1 + static_cast<int>(rng->randint(3)), rng);
    return max_grad_rel_error({a, b}, [&] {
      return ag::sum_squares(ag::concat_cols<double>({a, b}));
    });
  });

  add_check("concat_rows", [](Rng* rng) {
    const int c = 1 + static_cast<int>(rng->randint(3));
    auto a = random_tensor(1 + static_cast<int>(rng->randint(3)), c, rng);
    auto b = random_tensor(1 + static_cast<int>(rng->randint(3)), c, rng);
    return max_grad_rel_error({a, b}, [&] {
      return ag::sum_squares(ag::concat_rows<double>({a, b}));
    });
  });

  add_check("slice_cols", [](Rng* rng) {
    const int r = 2, c = 5;
    auto a = random_tensor(r, c, rng);
    const int c0 = static_cast<int>(rng->randint(3));
    return max_grad_rel_error(
        {a}, [&] { return ag::sum_squares(ag::slice_cols(a, c0, 2)); });
  });

  add_check("slice_rows", [](Rng* rng) {
    const int r = 5, c = 2;
    auto a = random_tensor(r, c, rng);
    const int r0 = static_cast<int>(rng->randint(3));
    return max_grad_rel_error(
        {a}, [&] { return ag::sum_squares(ag::slice_rows(a, r0, 2)); });
  });

  add_check("gather_rows", [](Rng* rng) {
    auto table = random_tensor(4, 3, rng);
    std::vector<int> ids;
    for (int i = 0; i < 5; ++i)
      ids.push_back(static_cast<int>(rng->randint(4)));
    return max_grad_rel_error(
        {table}, [&] { return ag::sum_squares(ag::gather_rows(table, ids)); });
  });

  add_check("pick", [](Rng* rng) {
    auto m = random_tensor(4, 3, rng);
    std::vector<int> ids;
    for (int i = 0; i < 4; ++i)
      ids.push_back(static_cast<int>(rng->randint(3)));
    return max_grad_rel_error(
        {m}, [&] { return ag::sum_squares(ag::pick(m, ids)); });
  });

  add_check("im2col", [](Rng* rng) {
    const int t = 3 + static_cast<int>(rng->randint(4));
    const int c = 1 + static_cast<int>(rng->randint(3));
    const int kw = 1 + static_cast<int>(rng->randint(3));
    const int stride = 1 + static_cast<int>(rng->randint(2));
    auto x = random_tensor(t, c, rng);
    const int pl = (kw - 1) / 2, pr = kw - 1 - pl;
    return max_grad_rel_error({x}, [&] {
      return ag::sum_squares(ag::im2col(x, kw, stride, pl, pr));
    });
  });

  add_check("maxpool_time", [](Rng* rng) {
    const int t = 3 + static_cast<int>(rng->randint(4));
    const int c = 1 + static_cast<int>(rng->randint(3));
    auto x = random_tensor(t, c, rng);
    return max_grad_rel_error(
        {x}, [&] { return ag::sum_squares(ag::maxpool_time(x, 2)); });
  });

  add_check("mul_scalar_t", [dims](Rng* rng) {
    auto [r, c] = dims(rng);
    auto m = random_tensor(r, c, rng);
    auto s = random_tensor(1, 1, rng, 0.5, 2.0);
    return max_grad_rel_error(
        {m, s}, [&] { return ag::sum_squares(ag::mul_scalar_t(m, s)); });
  });

  add_check("l2_normalize", [](Rng* rng) {
    auto x = random_tensor(1, 4 + static_cast<int>(rng->randint(4)), rng, 0.2, 1.0);
    auto w = random_tensor(1, x.cols(), rng);
    return max_grad_rel_error(
        {x, w}, [&] { return ag::sum(ag::mul(ag::l2_normalize(x), w)); });
  });

  add_check("cosine_similarity", [](Rng* rng) {
    const int d = 3 + static_cast<int>(rng->randint(4));
    auto a = random_tensor(1, d, rng, 0.2, 1.0);
    auto b = random_tensor(1, d, rng, 0.2, 1.0);
    return max_grad_rel_error(
        {a, b}, [&] { return ag::cosine_similarity(a, b); });
  });

  return checks;
}

}  // namespace testing
}  // namespace speechchain

#endif  // SPEECHCHAIN_TESTS_GRAD_SUITE_H_
