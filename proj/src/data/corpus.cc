// data/corpus.cc
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

#include "data/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "dsp/wav.h"

namespace speechchain {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

// Characters with a tonal unit, in base-frequency order.
const std::string kTonalChars = "abcdefghijklmnopqrstuvwxyz'.-";

// Log-spaced base frequency for tonal character index k.
double char_base_hz(int k) {
  const double lo = 300.0, hi = 2000.0;
  return lo * std::pow(hi / lo, static_cast<double>(k) /
                                    (kTonalChars.size() - 1));
}

// Tone periods must divide the 100 ms unit so the same (speaker, character)
// unit is sample-identical wherever it appears: quantize to the 10 Hz grid.
double quantize_hz(double f) { return std::round(f / 10.0) * 10.0; }

int tonal_index(char c) {
  const size_t pos = kTonalChars.find(c);
  return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

std::string speaker_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03d", index);
  return buf;
}

}  // namespace

VoiceParams speaker_voice(const SynthCorpusConfig& cfg, int index) {
  Rng voice_rng(cfg.seed ^ 0x9a1cULL,
                0x1000000ULL + static_cast<uint64_t>(index));
  VoiceParams v;
  // Pitches follow a golden-ratio low-discrepancy sequence over the range:
  // any contiguous block of speaker indices covers the pitch band evenly,
  // so held-out voices always have near neighbours among training voices.
  const double phase = 0.6180339887498949 * (index + 1) +
                       0.5 * Rng(cfg.seed ^ 0x9a1cULL, 0x2000000ULL).uniform();
  const double pitch = cfg.pitch_hz_min +
                       (cfg.pitch_hz_max - cfg.pitch_hz_min) *
                           (phase - std::floor(phase));
  v.pitch_ratio = pitch / cfg.pitch_reference_hz;
  v.anchor_hz =
      (3600.0 + voice_rng.uniform(-cfg.formant_offset_hz,
                                  cfg.formant_offset_hz)) *
      v.pitch_ratio;
  v.timbre2 = voice_rng.uniform(0.1, 0.7);
  v.timbre3 = voice_rng.uniform(0.05, 0.5);
  return v;
}

std::vector<float> render_utterance(const SynthCorpusConfig& cfg,
                                    const VoiceParams& voice,
                                    const std::string& text, Rng* noise_rng) {
  const int unit = static_cast<int>(cfg.unit_seconds * cfg.sample_rate);
  const int lead = static_cast<int>(cfg.lead_seconds * cfg.sample_rate);
  const int total = 2 * lead + unit * static_cast<int>(text.size());
  std::vector<float> wave(total, 0.0f);
  const double dt = 1.0 / cfg.sample_rate;

  // Tone frequencies sit on the 10 Hz grid, so every period divides the
  // 100 ms unit. Evaluating phases on sample indices reduced modulo the
  // unit keeps the signal continuous and makes the same (speaker,
  // character) unit bit-identical wherever it appears.
  const double anchor_hz = quantize_hz(voice.anchor_hz);
  for (int t = 0; t < total; ++t)
    wave[t] += static_cast<float>(
        0.22 * std::sin(kTwoPi * anchor_hz * (t % unit) * dt));

  const double wsum = 1.0 + voice.timbre2 + voice.timbre3;
  const double w1 = 1.0 / wsum, w2 = voice.timbre2 / wsum,
               w3 = voice.timbre3 / wsum;
  const int fade = cfg.sample_rate / 100;  // 10 ms
  for (size_t ci = 0; ci < text.size(); ++ci) {
    const int k = tonal_index(text[ci]);
    if (k < 0) continue;  // space and unknowns stay silent
    const double f0 = quantize_hz(char_base_hz(k) * voice.pitch_ratio);
    const int start = lead + static_cast<int>(ci) * unit;
    for (int i = 0; i < unit; ++i) {
      double env = 1.0;
      if (i < fade) env = 0.5 - 0.5 * std::cos(kTwoPi * i / (2.0 * fade));
      else if (i >= unit - fade)
        env = 0.5 - 0.5 * std::cos(kTwoPi * (unit - 1 - i) / (2.0 * fade));
      const double ph = kTwoPi * f0 * ((lead + i) % unit) * dt;
      const double s =
          w1 * std::sin(ph) + w2 * std::sin(2.0 * ph) + w3 * std::sin(3.0 * ph);
      wave[start + i] += static_cast<float>(0.5 * env * s);
    }
  }
  if (cfg.noise_level > 0.0)
    for (int t = 0; t < total; ++t)
      wave[t] += static_cast<float>(cfg.noise_level * noise_rng->gaussian());
  return wave;
}

std::vector<Utterance> generate_synthetic_corpus(const SynthCorpusConfig& cfg) {
  if (cfg.n_speakers < 1)
    throw std::invalid_argument("generate_synthetic_corpus: zero speakers");
  if (cfg.text_len_min < 1 || cfg.text_len_max < cfg.text_len_min)
    throw std::invalid_argument("generate_synthetic_corpus: bad text lengths");

  static const std::string kLetters = "abcdefghijklmnopqrstuvwxyz";
  std::vector<Utterance> corpus;
  corpus.reserve(static_cast<size_t>(cfg.n_speakers) *
                 cfg.utterances_per_speaker);
  for (int s = 0; s < cfg.n_speakers; ++s) {
    const int spk_index = cfg.speaker_index_offset + s;
    const VoiceParams voice = speaker_voice(cfg, spk_index);
    for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
      // one stream per (speaker, utterance): generation order-independent
      Rng rng(cfg.seed ^ 0x7e57ULL,
              (static_cast<uint64_t>(spk_index) << 20) |
                  static_cast<uint64_t>(u));
      const int len = cfg.text_len_min +
                      static_cast<int>(rng.randint(
                          cfg.text_len_max - cfg.text_len_min + 1));
      std::string text;
      for (int i = 0; i < len; ++i) {
        const double roll = rng.uniform();
        if (roll < 0.85 || i == 0 || i == len - 1) {
          text.push_back(kLetters[static_cast<size_t>(rng.randint(26))]);
        } else if (roll < 0.93) {
          text.push_back(' ');
        } else {
          static const std::string punct = "'.-";
          text.push_back(punct[static_cast<size_t>(rng.randint(3))]);
        }
      }
      Utterance utt;
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "spk%03d_utt%04d", spk_index, u);
      utt.id = idbuf;
      utt.speaker = speaker_name(spk_index);
      utt.text = text;
      utt.samples = render_utterance(cfg, voice, text, &rng);
      corpus.push_back(std::move(utt));
    }
  }
  return corpus;
}

void write_manifest(const std::vector<Utterance>& corpus,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& u : corpus) {
    nlohmann::json row{{"id", u.id},
                       {"audio", u.audio},
                       {"text", u.text},
                       {"speaker", u.speaker}};
    out << row.dump() << "\n";
  }
}

std::vector<Utterance> read_manifest(const std::string& path, bool load_audio) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path);
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  std::vector<Utterance> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json row = nlohmann::json::parse(line);
    Utterance u;
    u.id = row.at("id").get<std::string>();
    u.audio = row.at("audio").get<std::string>();
    u.text = row.at("text").get<std::string>();
    u.speaker = row.at("speaker").get<std::string>();
    if (load_audio && !u.audio.empty()) {
      const std::filesystem::path wav_path =
          std::filesystem::path(u.audio).is_absolute()
              ? std::filesystem::path(u.audio)
              : base / u.audio;
      dsp::WavData wav = dsp::read_wav(wav_path.string());
      u.samples = std::move(wav.samples);
    }
    corpus.push_back(std::move(u));
  }
  return corpus;
}

std::string write_corpus(const std::vector<Utterance>& corpus,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "wav");
  std::vector<Utterance> rows = corpus;
  for (auto& u : rows) {
    u.audio = "wav/" + u.id + ".wav";
    dsp::write_wav((fs::path(dir) / u.audio).string(), u.samples, 16000);
  }
  const std::string manifest = (fs::path(dir) / "manifest.jsonl").string();
  write_manifest(rows, manifest);
  return manifest;
}

DataSplit split_paired_unpaired(const std::vector<Utterance>& manifest,
                                double paired_fraction, bool disjoint_speakers,
                                uint64_t seed) {
  if (!(paired_fraction > 0.0 && paired_fraction <= 1.0))
    throw std::invalid_argument("paired_fraction must be in (0, 1]");
  DataSplit split;
  Rng rng(seed, 0x511);
  if (disjoint_speakers) {
    std::map<std::string, std::vector<const Utterance*>> by_speaker;
    for (const auto& u : manifest) by_speaker[u.speaker].push_back(&u);
    std::vector<std::string> speakers;
    for (const auto& [spk, utts] : by_speaker) speakers.push_back(spk);
    // seeded shuffle
    for (size_t i = speakers.size(); i > 1; --i)
      std::swap(speakers[i - 1],
                speakers[static_cast<size_t>(rng.randint(i))]);
    const size_t target =
        static_cast<size_t>(paired_fraction * manifest.size() + 0.5);
    size_t assigned = 0;
    std::set<std::string> paired_speakers;
    for (const auto& spk : speakers) {
      if (assigned >= target && !paired_speakers.empty()) break;
      paired_speakers.insert(spk);
      assigned += by_speaker[spk].size();
    }
    for (const auto& u : manifest) {
      if (paired_speakers.count(u.speaker))
        split.paired.push_back(u);
      else
        split.unpaired.push_back(u);
    }
  } else {
    std::vector<size_t> order(manifest.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(rng.randint(i))]);
    const size_t target =
        static_cast<size_t>(paired_fraction * manifest.size() + 0.5);
    std::vector<bool> is_paired(manifest.size(), false);
    for (size_t i = 0; i < std::min(target, order.size()); ++i)
      is_paired[order[i]] = true;
    for (size_t i = 0; i < manifest.size(); ++i) {
      if (is_paired[i])
        split.paired.push_back(manifest[i]);
      else
        split.unpaired.push_back(manifest[i]);
    }
  }
  if (paired_fraction == 1.0 && !split.unpaired.empty()) {
    // fraction 1 means everything paired regardless of speaker layout
    for (auto& u : split.unpaired) split.paired.push_back(std::move(u));
    split.unpaired.clear();
  }
  return split;
}

}  // namespace speechchain
