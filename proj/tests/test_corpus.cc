// tests/test_corpus.cc
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

#include <cstdio>
#include <filesystem>
#include <set>

#include "data/corpus.h"
#include "text/alphabet.h"

using namespace speechchain;

namespace {

SynthCorpusConfig small_cfg() {
  SynthCorpusConfig cfg;
  cfg.n_speakers = 4;
  cfg.utterances_per_speaker = 5;
  cfg.text_len_min = 3;
  cfg.text_len_max = 6;
  cfg.noise_level = 0.02;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_CASE("corpus generation is a pure function of the config") {
  auto a = generate_synthetic_corpus(small_cfg());
  auto b = generate_synthetic_corpus(small_cfg());
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == 20);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].speaker == b[i].speaker);
    CHECK(a[i].samples == b[i].samples);
  }

  // a different seed changes the corpus
  SynthCorpusConfig other = small_cfg();
  other.seed = 2;
  auto c = generate_synthetic_corpus(other);
  bool any_diff = false;
  for (size_t i = 0; i < a.size() && !any_diff; ++i)
    any_diff = a[i].text != c[i].text || a[i].samples != c[i].samples;
  CHECK(any_diff);
}

TEST_CASE("transcripts stay within the alphabet") {
  text::Alphabet ab;
  for (const auto& u : generate_synthetic_corpus(small_cfg())) {
    CHECK(!u.text.empty());
    CHECK(ab.decode(ab.encode(u.text)) == u.text);
  }
}

TEST_CASE("different speakers render the same text differently") {
  SynthCorpusConfig cfg = small_cfg();
  cfg.noise_level = 0.0;
  const VoiceParams v0 = speaker_voice(cfg, 0);
  const VoiceParams v1 = speaker_voice(cfg, 1);
  Rng rng(0);
  auto w0 = render_utterance(cfg, v0, "abc", &rng);
  auto w1 = render_utterance(cfg, v1, "abc", &rng);
  REQUIRE(w0.size() == w1.size());
  double l2 = 0;
  for (size_t i = 0; i < w0.size(); ++i) {
    const double d = w0[i] - w1[i];
    l2 += d * d;
  }
  CHECK(l2 > 0.0);
}

TEST_CASE("same speaker and character give identical units up to noise") {
  SynthCorpusConfig cfg = small_cfg();
  cfg.noise_level = 0.0;
  const VoiceParams voice = speaker_voice(cfg, 2);
  Rng rng(0);
  auto wave = render_utterance(cfg, voice, "aba", &rng);
  const int unit = static_cast<int>(cfg.unit_seconds * cfg.sample_rate);
  const int lead = static_cast<int>(cfg.lead_seconds * cfg.sample_rate);
  for (int i = 0; i < unit; ++i)
    CHECK(wave[lead + i] == wave[lead + 2 * unit + i]);
  // and the middle differs (different character)
  double diff = 0;
  for (int i = 0; i < unit; ++i)
    diff += std::fabs(wave[lead + i] - wave[lead + unit + i]);
  CHECK(diff > 1.0);
}

TEST_CASE("zero speakers is an error") {
  SynthCorpusConfig cfg = small_cfg();
  cfg.n_speakers = 0;
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), std::invalid_argument);
}

TEST_CASE("manifest round trips") {
  auto corpus = generate_synthetic_corpus(small_cfg());
  for (auto& u : corpus) u.audio = "wav/" + u.id + ".wav";
  const std::string path = "test_manifest.jsonl";
  write_manifest(corpus, path);
  auto loaded = read_manifest(path, /*load_audio=*/false);
  REQUIRE(loaded.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(loaded[i].id == corpus[i].id);
    CHECK(loaded[i].audio == corpus[i].audio);
    CHECK(loaded[i].text == corpus[i].text);
    CHECK(loaded[i].speaker == corpus[i].speaker);
  }
  std::remove(path.c_str());
}

TEST_CASE("corpus wav files round trip through disk") {
  SynthCorpusConfig cfg = small_cfg();
  cfg.n_speakers = 2;
  cfg.utterances_per_speaker = 2;
  auto corpus = generate_synthetic_corpus(cfg);
  const std::string dir = "test_corpus_dir";
  const std::string manifest = write_corpus(corpus, dir);
  auto loaded = read_manifest(manifest, /*load_audio=*/true);
  REQUIRE(loaded.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    REQUIRE(loaded[i].samples.size() == corpus[i].samples.size());
    for (size_t t = 0; t < corpus[i].samples.size(); ++t)
      CHECK(std::fabs(loaded[i].samples[t] - corpus[i].samples[t]) <=
            1.0f / 32768.0f);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("disjoint speaker split separates the speaker sets") {
  SynthCorpusConfig cfg = small_cfg();
  cfg.n_speakers = 6;
  auto corpus = generate_synthetic_corpus(cfg);
  auto split = split_paired_unpaired(corpus, 0.4, true, 9);
  CHECK(!split.paired.empty());
  CHECK(!split.unpaired.empty());
  std::set<std::string> paired_spk, unpaired_spk;
  for (const auto& u : split.paired) paired_spk.insert(u.speaker);
  for (const auto& u : split.unpaired) unpaired_spk.insert(u.speaker);
  for (const auto& s : paired_spk) CHECK(unpaired_spk.count(s) == 0);

  // union is the manifest with no duplicates
  std::set<std::string> ids;
  for (const auto& u : split.paired) ids.insert(u.id);
  for (const auto& u : split.unpaired) ids.insert(u.id);
  CHECK(ids.size() == corpus.size());
}

TEST_CASE("paired fraction one leaves nothing unpaired") {
  auto corpus = generate_synthetic_corpus(small_cfg());
  auto split = split_paired_unpaired(corpus, 1.0, true, 3);
  CHECK(split.unpaired.empty());
  CHECK(split.paired.size() == corpus.size());
}

TEST_CASE("invalid paired fractions are rejected") {
  auto corpus = generate_synthetic_corpus(small_cfg());
  CHECK_THROWS_AS(split_paired_unpaired(corpus, 0.0, true, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(split_paired_unpaired(corpus, 1.2, true, 1),
                  std::invalid_argument);
}

TEST_CASE("non-disjoint split honors the utterance fraction") {
  auto corpus = generate_synthetic_corpus(small_cfg());
  auto split = split_paired_unpaired(corpus, 0.5, false, 5);
  CHECK(split.paired.size() == corpus.size() / 2);
  CHECK(split.paired.size() + split.unpaired.size() == corpus.size());
}

TEST_CASE("split is deterministic per seed") {
  auto corpus = generate_synthetic_corpus(small_cfg());
  auto a = split_paired_unpaired(corpus, 0.4, true, 11);
  auto b = split_paired_unpaired(corpus, 0.4, true, 11);
  REQUIRE(a.paired.size() == b.paired.size());
  for (size_t i = 0; i < a.paired.size(); ++i)
    CHECK(a.paired[i].id == b.paired[i].id);
}
