// train/chain.h
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

#ifndef SPEECHCHAIN_TRAIN_CHAIN_H_
#define SPEECHCHAIN_TRAIN_CHAIN_H_

// Closed-loop semi-supervised trainer. Each iteration runs up to three mode
// steps: paired supervision, a speech-only cycle (recognize, then teach the
// synthesizer on its own transcript), and a text-only cycle (synthesize with
// a sampled speaker voice, then teach the recognizer). The mode losses are
// combined as alpha * (paired) + beta * (unpaired) and backpropagated once;
// the recognizer and synthesizer each keep their own Adam state, and the
// speaker encoder stays frozen throughout.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/optim.h"
#include "core/rng.h"
#include "data/corpus.h"
#include "dsp/dsp.h"
#include "models/asr.h"
#include "models/speaker_encoder.h"
#include "models/tts.h"
#include "text/alphabet.h"

namespace speechchain {

// Per-utterance features, computed once and reused across iterations.
class FeatureCache {
 public:
  FeatureCache(const dsp::DspConfig& cfg, ag::Tensor<float> filterbank)
      : cfg_(cfg), filterbank_(std::move(filterbank)) {}

  const dsp::FeatureSet& get(const Utterance& utt);
  const dsp::DspConfig& dsp_config() const { return cfg_; }
  const ag::Tensor<float>& filterbank() const { return filterbank_; }

 private:
  dsp::DspConfig cfg_;
  ag::Tensor<float> filterbank_;
  std::map<std::string, dsp::FeatureSet> by_id_;
};

struct ChainLosses {
  std::optional<float> paired_asr;
  std::optional<float> paired_tts;
  std::optional<float> unpaired_asr;
  std::optional<float> unpaired_tts;
  float alpha = 1.0f;
  float beta = 0.5f;

  float total() const {
    auto v = [](const std::optional<float>& x) { return x.value_or(0.0f); };
    return alpha * (v(paired_asr) + v(paired_tts)) +
           beta * (v(unpaired_asr) + v(unpaired_tts));
  }
};

struct ChainConfig {
  float alpha = 1.0f;
  float beta = 0.5f;
  int batch_paired = 4;
  int batch_unpaired_speech = 4;
  int batch_unpaired_text = 4;
  int decode_beam = 5;        // mode (b); 1 = greedy
  int max_decode_len = 24;    // characters
  int max_gen_frames = 96;    // mode (c) cap, multiple of the tts reduction
  float asr_lr = 5e-4f;
  float tts_lr = 5e-4f;
  float grad_clip = 5.0f;
  bool train_asr = true;
  bool train_tts = true;
  uint64_t seed = 0;
  TtsLossWeights<float> tts_weights;
};

struct MetricRow {
  int iteration = 0;
  std::string mode;
  std::string loss_name;
  double value = 0.0;
};

struct ChainStats {
  int unpaired_speech_skips = 0;   // empty recognition hypotheses
  int generation_max_frame_hits = 0;
  int aborted_steps = 0;           // non-finite combined loss
};

void write_metrics_csv(const std::vector<MetricRow>& rows,
                       const std::string& path);

class ChainTrainer {
 public:
  ChainTrainer(AsrModel<float>* asr, TtsModel<float>* tts,
               SpeakerEncoder<float>* spkrec, FeatureCache* features,
               const ChainConfig& cfg);

  // Interleaves one paired, one unpaired-speech and one unpaired-text step
  // per iteration (modes with beta == 0 or empty data are skipped). Appends
  // one metric row per loss. Throws when alpha > 0 and the paired split is
  // empty.
  void run(const DataSplit& split, int iterations);

  const std::vector<MetricRow>& metrics() const { return metrics_; }
  const ChainStats& stats() const { return stats_; }

  // Mode steps, exposed for the isolation and reduction tests. Each builds
  // the loss graph for one batch without updating anything.
  ag::Tensor<float> paired_asr_loss(const std::vector<const Utterance*>& batch);
  ag::Tensor<float> paired_tts_loss(const std::vector<const Utterance*>& batch);
  std::optional<ag::Tensor<float>> unpaired_speech_loss(
      const std::vector<const Utterance*>& batch);
  ag::Tensor<float> unpaired_text_loss(
      const std::vector<const Utterance*>& batch,
      const std::vector<const Utterance*>& speech_pool);

  std::vector<const Utterance*> sample_batch(
      const std::vector<Utterance>& data, int n, Rng* rng) const;

  Rng* paired_rng() { return &paired_rng_; }
  Rng* unpaired_speech_rng() { return &unpaired_speech_rng_; }
  Rng* unpaired_text_rng() { return &unpaired_text_rng_; }
  Rng* pool_rng() { return &pool_rng_; }

 private:
  void apply_update(const ag::Tensor<float>& total_loss);

  AsrModel<float>* asr_;
  TtsModel<float>* tts_;
  SpeakerEncoder<float>* spkrec_;
  FeatureCache* features_;
  ChainConfig cfg_;
  text::Alphabet alphabet_;

  std::vector<ag::Tensor<float>> asr_params_;
  std::vector<ag::Tensor<float>> tts_params_;
  optim::AdamState<float> asr_adam_;
  optim::AdamState<float> tts_adam_;

  // Independent sampling streams: disabling one mode does not shift the
  // draws of another, which keeps beta = 0 bitwise equal to supervised.
  Rng paired_rng_;
  Rng unpaired_speech_rng_;
  Rng unpaired_text_rng_;
  Rng pool_rng_;

  std::vector<MetricRow> metrics_;
  ChainStats stats_;
};

// Supervised training is the chain loop with beta = 0 and no unpaired data.
void train_supervised(AsrModel<float>* asr, TtsModel<float>* tts,
                      SpeakerEncoder<float>* spkrec, FeatureCache* features,
                      const std::vector<Utterance>& paired, int iterations,
                      ChainConfig cfg, std::vector<MetricRow>* metrics_out);

// Targets padded to a multiple of the synthesizer reduction factor by
// repeating the final frame; stop labels cover the padding with ones.
struct PaddedTarget {
  ag::Tensor<float> mel;
  ag::Tensor<float> linear;
  std::vector<float> stop_labels;
  int true_frames = 0;
};
PaddedTarget pad_targets(const dsp::FeatureSet& fs, int frames_per_step);

}  // namespace speechchain

#endif  // SPEECHCHAIN_TRAIN_CHAIN_H_
