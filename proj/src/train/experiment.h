// train/experiment.h
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

#ifndef SPEECHCHAIN_TRAIN_EXPERIMENT_H_
#define SPEECHCHAIN_TRAIN_EXPERIMENT_H_

// Evaluation metrics and the experiment pipelines: paired-only baseline,
// full-supervision upper bound, label propagation, and the closed-loop
// trainer, each evaluated on a held-out dev set of unseen speakers.

#include <optional>
#include <string>
#include <vector>

#include "data/corpus.h"
#include "models/asr.h"
#include "models/speaker_encoder.h"
#include "models/tts.h"
#include "train/chain.h"
#include "train/speaker_trainer.h"

namespace speechchain {

// Corpus-level character error rate: total edit distance over total
// reference characters, beam-decoded.
double evaluate_asr(const AsrModel<float>& asr,
                    const std::vector<Utterance>& test, int beam, int max_len,
                    FeatureCache* features);

// Mean over utterances of (masked L2 on log-mel / true frames) under
// teacher forcing with the ground-truth speaker embedding.
double evaluate_tts(const TtsModel<float>& tts,
                    const SpeakerEncoder<float>& spkrec,
                    const std::vector<Utterance>& test,
                    FeatureCache* features);

// Beam-decodes transcripts onto speech-only utterances. Empty hypotheses are
// dropped (counted in *skips).
std::vector<Utterance> label_propagation(const AsrModel<float>& asr,
                                         const std::vector<Utterance>& unpaired,
                                         int beam, int max_len,
                                         FeatureCache* features,
                                         int* skips = nullptr);

// Share of held-out speakers whose synthesized utterance re-embeds closer to
// the conditioning embedding than to every other speaker's centroid.
double one_shot_adaptation_rate(const TtsModel<float>& tts,
                                const SpeakerEncoder<float>& spkrec,
                                const std::vector<Utterance>& dev,
                                FeatureCache* features, int max_gen_frames);

struct ExperimentConfig {
  std::string scenario = "baseline-paired";
  // baseline-paired | upper-bound | label-prop | speech-chain | all

  SynthCorpusConfig corpus;
  int dev_speakers = 10;
  int dev_utterances_per_speaker = 8;
  double paired_fraction = 0.4;
  bool disjoint_speakers = true;
  uint64_t seed = 0;

  dsp::DspConfig dsp;
  AsrConfig asr;
  TtsConfig tts;
  SpeakerEncoderConfig spk;

  SpeakerTrainConfig spk_train;
  int supervised_iterations = 1500;
  int upper_bound_iterations = 3000;
  int chain_iterations = 1200;
  ChainConfig chain;

  int eval_beam = 5;
  int eval_max_len = 24;
  std::string out_dir;  // metrics, reports and checkpoints when non-empty
};

struct ReportRow {
  std::string scenario;
  std::string metric;
  double value = 0.0;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<MetricRow> chain_metrics;  // all four loss curves

  std::optional<double> find(const std::string& scenario,
                             const std::string& metric) const {
    for (const auto& r : rows)
      if (r.scenario == scenario && r.metric == metric) return r.value;
    return std::nullopt;
  }
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_report_csv(const std::vector<ReportRow>& rows,
                      const std::string& path);

}  // namespace speechchain

#endif  // SPEECHCHAIN_TRAIN_EXPERIMENT_H_
