// text/alphabet.cc
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

#include "text/alphabet.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace speechchain {
namespace text {

Alphabet::Alphabet() {
  symbols_.reserve(kSize);
  for (char c = 'a'; c <= 'z'; ++c) symbols_.emplace_back(1, c);
  symbols_.emplace_back("'");
  symbols_.emplace_back(".");
  symbols_.emplace_back("-");
  symbols_.emplace_back("<noise>");
  symbols_.emplace_back("<spc>");
  symbols_.emplace_back("<s>");
  symbols_.emplace_back("</s>");

  std::fill(std::begin(char_to_id_), std::end(char_to_id_), kNoiseId);
  for (int i = 0; i < 26; ++i) char_to_id_['a' + i] = i;
  char_to_id_[static_cast<unsigned char>('\'')] = 26;
  char_to_id_[static_cast<unsigned char>('.')] = 27;
  char_to_id_[static_cast<unsigned char>('-')] = 28;
  char_to_id_[static_cast<unsigned char>(' ')] = kSpaceId;
}

std::vector<int> Alphabet::encode(const std::string& txt) const {
  std::vector<int> ids;
  ids.reserve(txt.size() + 2);
  ids.push_back(kSosId);
  for (unsigned char c : txt)
    ids.push_back(char_to_id_[std::tolower(c)]);
  ids.push_back(kEosId);
  return ids;
}

std::string Alphabet::decode(const std::vector<int>& ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= kSize)
      throw std::out_of_range("decode: id out of alphabet range");
    if (id == kSosId) continue;
    if (id == kEosId) break;
    if (id == kSpaceId) {
      out.push_back(' ');
    } else if (id == kNoiseId) {
      out.push_back(kNoiseChar);
    } else {
      out += symbols_[id];
    }
  }
  return out;
}

std::string Alphabet::symbol(int id) const {
  if (id < 0 || id >= kSize)
    throw std::out_of_range("symbol: id out of alphabet range");
  return symbols_[id];
}

std::string Alphabet::fingerprint() const {
  std::string fp;
  for (const auto& s : symbols_) {
    if (!fp.empty()) fp.push_back('|');
    fp += s;
  }
  return fp;
}

size_t edit_distance(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double character_error_rate(const std::string& reference,
                            const std::string& hypothesis) {
  if (reference.empty())
    throw std::invalid_argument("character_error_rate: empty reference");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

}  // namespace text
}  // namespace speechchain
