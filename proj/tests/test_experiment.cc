// tests/test_experiment.cc
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

#include <filesystem>
#include <fstream>

#include "train/experiment.h"

using namespace speechchain;

namespace {

// Deliberately tiny everything: this exercises the pipeline plumbing, not
// the model quality.
ExperimentConfig micro_config() {
  ExperimentConfig cfg;
  cfg.seed = 3;
  cfg.corpus.n_speakers = 4;
  cfg.corpus.utterances_per_speaker = 3;
  cfg.corpus.text_len_min = 2;
  cfg.corpus.text_len_max = 3;
  cfg.corpus.noise_level = 0.01;
  cfg.corpus.seed = 3;
  cfg.dev_speakers = 2;
  cfg.dev_utterances_per_speaker = 2;
  cfg.paired_fraction = 0.5;

  cfg.dsp.n_fft = 512;
  cfg.dsp.win_length = 400;
  cfg.dsp.hop_length = 200;
  cfg.dsp.n_mels = 20;

  cfg.asr.n_mels = 20;
  cfg.asr.enc_hidden = 6;
  cfg.asr.dec_embed = 6;
  cfg.asr.dec_hidden = 8;
  cfg.asr.att_dim = 4;

  cfg.tts.embed_dim = 6;
  cfg.tts.enc_prenet1 = 6;
  cfg.tts.enc_prenet2 = 4;
  cfg.tts.enc_cbhg.in_dim = 4;
  cfg.tts.enc_cbhg.bank_k = 2;
  cfg.tts.enc_cbhg.bank_channels = 4;
  cfg.tts.enc_cbhg.proj_channels = 4;
  cfg.tts.enc_cbhg.highway_dim = 4;
  cfg.tts.enc_cbhg.highway_layers = 1;
  cfg.tts.enc_cbhg.gru_hidden = 3;
  cfg.tts.spk_dim = 4;
  cfg.tts.dec_prenet1 = 6;
  cfg.tts.dec_prenet2 = 4;
  cfg.tts.dec_hidden = 6;
  cfg.tts.att_dim = 4;
  cfg.tts.n_mels = 20;
  cfg.tts.spk_proj_out = 4;
  cfg.tts.out_fc = 8;
  cfg.tts.post_cbhg.in_dim = 20;
  cfg.tts.post_cbhg.bank_k = 2;
  cfg.tts.post_cbhg.bank_channels = 4;
  cfg.tts.post_cbhg.proj_channels = 4;
  cfg.tts.post_cbhg.highway_dim = 4;
  cfg.tts.post_cbhg.highway_layers = 1;
  cfg.tts.post_cbhg.gru_hidden = 3;
  cfg.tts.n_linear = cfg.dsp.bins();

  cfg.spk.n_mels = 20;
  cfg.spk.conv_channels = 6;
  cfg.spk.embed_dim = 4;
  cfg.spk_train.epochs = 2;
  cfg.spk_train.batches_per_epoch = 2;
  cfg.spk_train.triplets_per_batch = 4;

  cfg.supervised_iterations = 6;
  cfg.upper_bound_iterations = 6;
  cfg.chain_iterations = 4;
  cfg.chain.batch_paired = 2;
  cfg.chain.batch_unpaired_speech = 2;
  cfg.chain.batch_unpaired_text = 2;
  cfg.chain.decode_beam = 2;
  cfg.chain.max_decode_len = 5;
  cfg.chain.max_gen_frames = 24;
  cfg.eval_beam = 2;
  cfg.eval_max_len = 5;
  return cfg;
}

}  // namespace

TEST_CASE("unknown scenarios are rejected") {
  ExperimentConfig cfg = micro_config();
  cfg.scenario = "mystery";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("single-scenario runs report their own rows only") {
  ExperimentConfig cfg = micro_config();
  cfg.scenario = "baseline-paired";
  auto result = run_experiment(cfg);
  CHECK(result.find("baseline-paired", "dev_cer").has_value());
  CHECK(result.find("baseline-paired", "dev_tts_l2").has_value());
  CHECK_FALSE(result.find("upper-bound", "dev_cer").has_value());
  CHECK_FALSE(result.find("speech-chain", "dev_cer").has_value());
}

TEST_CASE("the full pipeline emits one row set per scenario plus curves") {
  ExperimentConfig cfg = micro_config();
  cfg.scenario = "all";
  cfg.out_dir = "test_experiment_out";
  auto result = run_experiment(cfg);

  for (const char* scenario :
       {"baseline-paired", "upper-bound", "label-prop", "speech-chain"})
    CHECK(result.find(scenario, "dev_cer").has_value());
  CHECK(result.find("speech-chain", "one_shot_rate").has_value());

  // all four loss curves are logged for the chain run
  std::set<std::string> names;
  for (const auto& row : result.chain_metrics)
    names.insert(row.mode + "/" + row.loss_name);
  CHECK(names.count("paired/asr_nll") == 1);
  CHECK(names.count("paired/tts_loss") == 1);
  CHECK(names.count("unpaired_speech/tts_loss") == 1);
  CHECK(names.count("unpaired_text/asr_nll") == 1);

  // report and metrics files exist
  namespace fs = std::filesystem;
  CHECK(fs::exists("test_experiment_out/report.csv"));
  CHECK(fs::exists("test_experiment_out/chain_metrics.csv"));
  CHECK(fs::exists("test_experiment_out/chain_asr.ckpt"));

  // metric values are finite and nonnegative
  for (const auto& row : result.rows) {
    CHECK(std::isfinite(row.value));
    CHECK(row.value >= 0.0);
  }
  fs::remove_all("test_experiment_out");
}

TEST_CASE("experiment runs are reproducible per seed") {
  ExperimentConfig cfg = micro_config();
  cfg.scenario = "baseline-paired";
  auto a = run_experiment(cfg);
  auto b = run_experiment(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i)
    CHECK(a.rows[i].value == b.rows[i].value);
}
