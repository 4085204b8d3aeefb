// core/rng.h
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

#ifndef SPEECHCHAIN_CORE_RNG_H_
#define SPEECHCHAIN_CORE_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace speechchain {

// Seeded generator with hand-rolled distributions. std::* distributions are
// implementation-defined, so sampling goes through explicit mappings from raw
// mt19937_64 draws: identical seeds give identical streams everywhere.
class Rng {
 public:
  // `stream` separates independent substreams of one experiment seed
  // (batch sampler, init, corpus noise, ...) so that disabling one consumer
  // does not shift the draws of another.
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : gen_(mix(seed, stream)) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1.
  int64_t randint(int64_t n) {
    return static_cast<int64_t>(uniform() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static uint64_t mix(uint64_t seed, uint64_t stream) {
    // splitmix64 over (seed, stream) to decorrelate nearby seeds.
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace speechchain

#endif  // SPEECHCHAIN_CORE_RNG_H_
