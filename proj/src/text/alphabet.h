// text/alphabet.h
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

#ifndef SPEECHCHAIN_TEXT_ALPHABET_H_
#define SPEECHCHAIN_TEXT_ALPHABET_H_

#include <string>
#include <vector>

namespace speechchain {
namespace text {

// Character set shared by the recognizer output and the synthesizer input:
// 26 letters, apostrophe, period, hyphen, then the noise / space /
// start-of-sequence / end-of-sequence tags. Ids are stable across runs.
class Alphabet {
 public:
  static constexpr int kSize = 33;
  static constexpr int kNoiseId = 29;
  static constexpr int kSpaceId = 30;
  static constexpr int kSosId = 31;
  static constexpr int kEosId = 32;
  // Single printable stand-in the noise tag decodes to, so error rates count
  // an emitted noise tag as one character.
  static constexpr char kNoiseChar = '#';

  Alphabet();

  int size() const { return kSize; }

  // Lowercases, maps spaces to the space tag and unknown characters to the
  // noise tag, and frames the result with start/end tags.
  std::vector<int> encode(const std::string& txt) const;

  // Inverse of encode on its image: strips framing tags, space tag -> ' '.
  // A missing end tag decodes up to the end of the sequence.
  std::string decode(const std::vector<int>& ids) const;

  // Printable form of one id ("a", "'", "<spc>", ...), for diagnostics.
  std::string symbol(int id) const;

  // Serialized symbol list for checkpoint compatibility validation.
  std::string fingerprint() const;

 private:
  std::vector<std::string> symbols_;
  int char_to_id_[256];
};

// Levenshtein(ref, hyp) / len(ref) over raw characters (spaces included,
// framing tags never present). Throws on an empty reference.
double character_error_rate(const std::string& reference,
                            const std::string& hypothesis);

// Plain edit distance, exposed for corpus-level aggregation.
size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace text
}  // namespace speechchain

#endif  // SPEECHCHAIN_TEXT_ALPHABET_H_
