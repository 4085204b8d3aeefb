// tests/test_text.cc
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <map>
#include <string>

#include "core/rng.h"
#include "text/alphabet.h"

using namespace speechchain;
using text::Alphabet;

namespace {

// Independent memoized edit-distance oracle for the DP implementation.
size_t edit_distance_oracle(const std::string& a, const std::string& b) {
  std::map<std::pair<size_t, size_t>, size_t> memo;
  std::function<size_t(size_t, size_t)> go = [&](size_t i, size_t j) -> size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

std::string random_alphabet_string(Rng* rng, int min_len, int max_len) {
  static const std::string chars = "abcdefghijklmnopqrstuvwxyz'.- ";
  const int len = min_len + static_cast<int>(rng->randint(max_len - min_len + 1));
  std::string s;
  for (int i = 0; i < len; ++i)
    s.push_back(chars[static_cast<size_t>(rng->randint(chars.size()))]);
  return s;
}

}  // namespace

TEST_CASE("alphabet has 33 stable ids") {
  Alphabet ab;
  CHECK(ab.size() == 33);
  CHECK(ab.symbol(0) == "a");
  CHECK(ab.symbol(25) == "z");
  CHECK(ab.symbol(26) == "'");
  CHECK(ab.symbol(27) == ".");
  CHECK(ab.symbol(28) == "-");
  CHECK(ab.symbol(Alphabet::kNoiseId) == "<noise>");
  CHECK(ab.symbol(Alphabet::kSpaceId) == "<spc>");
  CHECK(ab.symbol(Alphabet::kSosId) == "<s>");
  CHECK(ab.symbol(Alphabet::kEosId) == "</s>");
}

TEST_CASE("encode frames and maps characters") {
  Alphabet ab;
  CHECK(ab.encode("ab") ==
        std::vector<int>{Alphabet::kSosId, 0, 1, Alphabet::kEosId});
  CHECK(ab.encode("a b") == std::vector<int>{Alphabet::kSosId, 0,
                                             Alphabet::kSpaceId, 1,
                                             Alphabet::kEosId});
  CHECK(ab.encode("a#b") == std::vector<int>{Alphabet::kSosId, 0,
                                             Alphabet::kNoiseId, 1,
                                             Alphabet::kEosId});
  CHECK(ab.encode("AB") == ab.encode("ab"));
}

TEST_CASE("decode inverts encode and tolerates truncation") {
  Alphabet ab;
  CHECK(ab.decode(ab.encode("it's a test.")) == "it's a test.");
  CHECK(ab.decode({}) == "");
  // missing end tag: decode to the end
  CHECK(ab.decode({Alphabet::kSosId, 7, 8}) == "hi");
  CHECK_THROWS_AS(ab.decode({99}), std::out_of_range);
}

TEST_CASE("round trip on 10000 random alphabet strings") {
  Alphabet ab;
  Rng rng(55);
  for (int i = 0; i < 10000; ++i) {
    const std::string s = random_alphabet_string(&rng, 0, 24);
    CHECK(ab.decode(ab.encode(s)) == s);
  }
}

TEST_CASE("cer basics") {
  CHECK(text::character_error_rate("abc", "abc") == 0.0);
  CHECK(text::character_error_rate("abc", "axc") ==
        doctest::Approx(1.0 / 3.0));
  CHECK(text::character_error_rate("abc", "") == doctest::Approx(1.0));
  CHECK_THROWS_AS(text::character_error_rate("", "x"), std::invalid_argument);
}

TEST_CASE("cer matches the memoized oracle on 200 random pairs") {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const std::string ref = random_alphabet_string(&rng, 1, 14);
    const std::string hyp = random_alphabet_string(&rng, 0, 14);
    const double expect =
        static_cast<double>(edit_distance_oracle(ref, hyp)) / ref.size();
    CHECK(text::character_error_rate(ref, hyp) == doctest::Approx(expect));
  }
}

TEST_CASE("edit distance is symmetric and triangle consistent") {
  Rng rng(78);
  for (int i = 0; i < 50; ++i) {
    const std::string a = random_alphabet_string(&rng, 0, 10);
    const std::string b = random_alphabet_string(&rng, 0, 10);
    const std::string c = random_alphabet_string(&rng, 0, 10);
    CHECK(text::edit_distance(a, b) == text::edit_distance(b, a));
    CHECK(text::edit_distance(a, c) <=
          text::edit_distance(a, b) + text::edit_distance(b, c));
    CHECK(text::edit_distance(a, a) == 0);
  }
}
