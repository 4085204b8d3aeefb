// data/corpus.h
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

#ifndef SPEECHCHAIN_DATA_CORPUS_H_
#define SPEECHCHAIN_DATA_CORPUS_H_

// Synthetic multi-speaker corpus: every character is a fixed 100 ms tonal
// unit whose frequencies scale with the speaker's pitch, colored by
// per-speaker harmonic weights, plus a continuous per-speaker anchor tone
// and Gaussian noise. Voices are distinct, text is decodable, and speaker
// identity is measurable, which is what the training loop experiments need.
// Utterances, manifests (JSON lines) and paired/unpaired splits live here.

#include <string>
#include <vector>

#include "core/rng.h"
#include "dsp/dsp.h"
#include "text/alphabet.h"

namespace speechchain {

struct Utterance {
  std::string id;
  std::string audio;  // wav path; empty when samples are held inline
  std::string text;
  std::string speaker;
  std::vector<float> samples;  // 16 kHz mono
};

struct SynthCorpusConfig {
  int n_speakers = 20;
  int utterances_per_speaker = 80;
  int text_len_min = 3;
  int text_len_max = 8;
  double noise_level = 0.02;
  uint64_t seed = 0;
  // Distinct ranges per corpus keep dev speakers disjoint from training
  // speakers while remaining one deterministic function of (seed, index).
  int speaker_index_offset = 0;

  // voice parameter ranges
  double pitch_hz_min = 115.0;
  double pitch_hz_max = 185.0;
  double pitch_reference_hz = 150.0;
  double formant_offset_hz = 60.0;  // anchor tone offset range, +-

  int sample_rate = 16000;
  double unit_seconds = 0.1;
  double lead_seconds = 0.04;
};

struct VoiceParams {
  double pitch_ratio = 1.0;
  double anchor_hz = 3600.0;
  double timbre2 = 0.4;
  double timbre3 = 0.2;
};

// Deterministic voice for speaker `index` under this config.
VoiceParams speaker_voice(const SynthCorpusConfig& cfg, int index);

// Renders one utterance waveform for a speaker voice (pure given cfg).
std::vector<float> render_utterance(const SynthCorpusConfig& cfg,
                                    const VoiceParams& voice,
                                    const std::string& text,
                                    Rng* noise_rng);

// Full corpus, samples inline. Pure function of cfg.
std::vector<Utterance> generate_synthetic_corpus(const SynthCorpusConfig& cfg);

// Writes WAV files under dir/wav/ and a manifest.jsonl next to them;
// returns the manifest path.
std::string write_corpus(const std::vector<Utterance>& corpus,
                         const std::string& dir);

// JSON-lines manifest: one utterance per line, fields id/audio/text/speaker.
void write_manifest(const std::vector<Utterance>& corpus,
                    const std::string& path);
std::vector<Utterance> read_manifest(const std::string& path,
                                     bool load_audio = true);

struct DataSplit {
  std::vector<Utterance> paired;
  // One record set, consumed through two views: the chain loop reads only
  // audio from the speech view and only text from the text view.
  std::vector<Utterance> unpaired;
};

// With disjoint_speakers the paired and unpaired speaker sets do not
// intersect; paired_fraction is the approximate share of utterances that
// stays paired. Throws when paired_fraction is outside (0, 1].
DataSplit split_paired_unpaired(const std::vector<Utterance>& manifest,
                                double paired_fraction, bool disjoint_speakers,
                                uint64_t seed);

}  // namespace speechchain

#endif  // SPEECHCHAIN_DATA_CORPUS_H_
