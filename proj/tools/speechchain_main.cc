// tools/speechchain_main.cc
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

// Command-line driver: corpus generation, splitting, the three trainers,
// label propagation, recognition, synthesis, evaluation and the end-to-end
// experiment pipelines. Every option can also come from a `key = value`
// config file via --config (command-line flags win).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "data/corpus.h"
#include "dsp/dsp.h"
#include "dsp/wav.h"
#include "models/model_io.h"
#include "text/alphabet.h"
#include "train/chain.h"
#include "train/experiment.h"
#include "train/speaker_trainer.h"

using namespace speechchain;

namespace {

void add_dsp_options(CLI::App* cmd, dsp::DspConfig* cfg) {
  cmd->add_option("--sample-rate", cfg->sample_rate, "audio sample rate")
      ->capture_default_str();
  cmd->add_option("--preemphasis", cfg->preemphasis, "pre-emphasis coefficient")
      ->capture_default_str();
  cmd->add_option("--win-length", cfg->win_length, "analysis window, samples")
      ->capture_default_str();
  cmd->add_option("--hop-length", cfg->hop_length, "frame step, samples")
      ->capture_default_str();
  cmd->add_option("--n-fft", cfg->n_fft, "FFT size")->capture_default_str();
  cmd->add_option("--n-mels", cfg->n_mels, "mel filter count")
      ->capture_default_str();
}

void add_corpus_options(CLI::App* cmd, SynthCorpusConfig* cfg) {
  cmd->add_option("--speakers", cfg->n_speakers, "speaker count")
      ->capture_default_str();
  cmd->add_option("--utts-per-speaker", cfg->utterances_per_speaker,
                  "utterances per speaker")
      ->capture_default_str();
  cmd->add_option("--text-len-min", cfg->text_len_min, "shortest transcript")
      ->capture_default_str();
  cmd->add_option("--text-len-max", cfg->text_len_max, "longest transcript")
      ->capture_default_str();
  cmd->add_option("--noise-level", cfg->noise_level, "additive noise sigma")
      ->capture_default_str();
  cmd->add_option("--pitch-min", cfg->pitch_hz_min, "lowest base pitch, Hz")
      ->capture_default_str();
  cmd->add_option("--pitch-max", cfg->pitch_hz_max, "highest base pitch, Hz")
      ->capture_default_str();
  cmd->add_option("--speaker-offset", cfg->speaker_index_offset,
                  "first speaker index (distinct ranges give distinct voices)")
      ->capture_default_str();
}

void add_asr_options(CLI::App* cmd, AsrConfig* cfg) {
  cmd->add_option("--asr-enc-hidden", cfg->enc_hidden,
                  "encoder LSTM units per direction")
      ->capture_default_str();
  cmd->add_option("--asr-dec-embed", cfg->dec_embed, "character embedding dim")
      ->capture_default_str();
  cmd->add_option("--asr-dec-hidden", cfg->dec_hidden, "decoder LSTM units")
      ->capture_default_str();
  cmd->add_option("--asr-att-dim", cfg->att_dim, "attention dim")
      ->capture_default_str();
}

void add_tts_options(CLI::App* cmd, TtsConfig* cfg) {
  cmd->add_option("--tts-embed", cfg->embed_dim, "character embedding dim")
      ->capture_default_str();
  cmd->add_option("--tts-enc-prenet1", cfg->enc_prenet1, "encoder prenet fc1")
      ->capture_default_str();
  cmd->add_option("--tts-enc-prenet2", cfg->enc_prenet2, "encoder prenet fc2")
      ->capture_default_str();
  cmd->add_option("--tts-enc-bank-channels", cfg->enc_cbhg.bank_channels,
                  "encoder conv bank channels")
      ->capture_default_str();
  cmd->add_option("--tts-enc-gru", cfg->enc_cbhg.gru_hidden,
                  "encoder GRU units per direction")
      ->capture_default_str();
  cmd->add_option("--tts-spk-dim", cfg->spk_dim, "speaker embedding dim")
      ->capture_default_str();
  cmd->add_option("--tts-dec-hidden", cfg->dec_hidden, "decoder LSTM units")
      ->capture_default_str();
  cmd->add_option("--tts-att-dim", cfg->att_dim, "attention dim")
      ->capture_default_str();
  cmd->add_option("--tts-out-fc", cfg->out_fc, "output fc width")
      ->capture_default_str();
  cmd->add_option("--tts-post-bank-channels", cfg->post_cbhg.bank_channels,
                  "post-net conv bank channels")
      ->capture_default_str();
  cmd->add_option("--tts-post-gru", cfg->post_cbhg.gru_hidden,
                  "post-net GRU units per direction")
      ->capture_default_str();
}

void sync_tts_dims(TtsConfig* cfg, const dsp::DspConfig& dsp_cfg) {
  cfg->n_mels = dsp_cfg.n_mels;
  cfg->n_linear = dsp_cfg.bins();
  cfg->enc_cbhg.in_dim = cfg->enc_prenet2;
  cfg->enc_cbhg.proj_channels = cfg->enc_prenet2;
  cfg->enc_cbhg.highway_dim = cfg->enc_prenet2;
  cfg->post_cbhg.in_dim = cfg->n_mels;
  cfg->post_cbhg.proj_channels = cfg->enc_prenet2;
  cfg->post_cbhg.highway_dim = cfg->enc_prenet2;
}

void add_spk_options(CLI::App* cmd, SpeakerEncoderConfig* cfg) {
  cmd->add_option("--spk-conv-channels", cfg->conv_channels,
                  "speaker encoder conv channels")
      ->capture_default_str();
  cmd->add_option("--spk-embed-dim", cfg->embed_dim, "speaker embedding dim")
      ->capture_default_str();
}

void add_chain_options(CLI::App* cmd, ChainConfig* cfg) {
  cmd->add_option("--alpha", cfg->alpha, "paired loss weight")
      ->capture_default_str();
  cmd->add_option("--beta", cfg->beta, "unpaired loss weight")
      ->capture_default_str();
  cmd->add_option("--batch-paired", cfg->batch_paired, "paired batch size")
      ->capture_default_str();
  cmd->add_option("--batch-unpaired-speech", cfg->batch_unpaired_speech,
                  "speech-only batch size")
      ->capture_default_str();
  cmd->add_option("--batch-unpaired-text", cfg->batch_unpaired_text,
                  "text-only batch size")
      ->capture_default_str();
  cmd->add_option("--decode-beam", cfg->decode_beam,
                  "beam for the speech-only cycle (1 = greedy)")
      ->capture_default_str();
  cmd->add_option("--max-decode-len", cfg->max_decode_len,
                  "decode length cap, characters")
      ->capture_default_str();
  cmd->add_option("--max-gen-frames", cfg->max_gen_frames,
                  "generation cap for the text-only cycle, frames")
      ->capture_default_str();
  cmd->add_option("--asr-lr", cfg->asr_lr, "recognizer Adam rate")
      ->capture_default_str();
  cmd->add_option("--tts-lr", cfg->tts_lr, "synthesizer Adam rate")
      ->capture_default_str();
  cmd->add_option("--grad-clip", cfg->grad_clip, "global grad-norm clip")
      ->capture_default_str();
  cmd->add_option("--gamma1", cfg->tts_weights.gamma1,
                  "synthesizer spectrogram loss weight")
      ->capture_default_str();
  cmd->add_option("--gamma2", cfg->tts_weights.gamma2,
                  "synthesizer stop loss weight")
      ->capture_default_str();
  cmd->add_option("--gamma3", cfg->tts_weights.gamma3,
                  "synthesizer speaker-style loss weight")
      ->capture_default_str();
}

FeatureCache make_cache(const dsp::DspConfig& cfg) {
  return FeatureCache(cfg, dsp::mel_filterbank(cfg));
}

// Routes flat `key = value` lines to the active subcommand when it owns the
// option, so config files need no section headers.
class FlatConfig : public CLI::ConfigBase {
 public:
  explicit FlatConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    const std::vector<CLI::App*> active = app_->get_subcommands();
    if (active.empty()) return items;
    for (auto& item : items) {
      if (!item.parents.empty()) continue;
      if (active.front()->get_option_no_throw("--" + item.name))
        item.parents = {active.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

std::string decode_to_text(const std::vector<int>& ids) {
  text::Alphabet ab;
  std::vector<int> framed{text::Alphabet::kSosId};
  framed.insert(framed.end(), ids.begin(), ids.end());
  framed.push_back(text::Alphabet::kEosId);
  return ab.decode(framed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-loop speech recognizer/synthesizer trainer"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  uint64_t seed = 0;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();


  // ---- gen-corpus ---------------------------------------------------------
  auto* gen = app.add_subcommand("gen-corpus", "render a synthetic corpus");
  SynthCorpusConfig gen_cfg;
  std::string gen_out = "corpus";
  add_corpus_options(gen, &gen_cfg);
  gen->add_option("--out", gen_out, "output directory")->capture_default_str();

  // ---- split --------------------------------------------------------------
  auto* split_cmd = app.add_subcommand(
      "split", "split a manifest into paired and unpaired sets");
  std::string split_manifest, split_out_dir;
  double paired_fraction = 0.4;
  bool disjoint = true;
  split_cmd->add_option("--manifest", split_manifest, "input manifest")
      ->required();
  split_cmd->add_option("--out-dir", split_out_dir,
                        "output directory (default: manifest directory)");
  split_cmd->add_option("--paired-fraction", paired_fraction,
                        "share of utterances kept paired")
      ->capture_default_str();
  split_cmd->add_flag("--disjoint,!--no-disjoint", disjoint,
                      "keep paired and unpaired speaker sets disjoint")
      ->capture_default_str();

  // ---- train-spkrec -------------------------------------------------------
  auto* tspk = app.add_subcommand("train-spkrec",
                                  "train the speaker embedding network");
  std::string tspk_manifest, tspk_out = "spkrec.ckpt";
  dsp::DspConfig tspk_dsp;
  SpeakerEncoderConfig tspk_cfg;
  SpeakerTrainConfig tspk_train;
  tspk->add_option("--paired", tspk_manifest, "paired manifest")->required();
  tspk->add_option("--out", tspk_out, "checkpoint path")->capture_default_str();
  tspk->add_option("--epochs", tspk_train.epochs, "training epochs")
      ->capture_default_str();
  tspk->add_option("--spk-lr", tspk_train.lr, "Adam rate")->capture_default_str();
  tspk->add_option("--margin", tspk_train.margin, "triplet margin")
      ->capture_default_str();
  add_dsp_options(tspk, &tspk_dsp);
  add_spk_options(tspk, &tspk_cfg);

  // ---- train-supervised ---------------------------------------------------
  auto* tsup = app.add_subcommand(
      "train-supervised", "paired-only training of recognizer and synthesizer");
  std::string tsup_manifest, tsup_spkrec, tsup_out_dir = "supervised";
  int tsup_iterations = 2000;
  bool tsup_asr_only = false;
  dsp::DspConfig tsup_dsp;
  AsrConfig tsup_asr;
  TtsConfig tsup_tts;
  ChainConfig tsup_chain;
  tsup->add_option("--paired", tsup_manifest, "paired manifest")->required();
  tsup->add_option("--spkrec", tsup_spkrec, "speaker encoder checkpoint")
      ->required();
  tsup->add_option("--out-dir", tsup_out_dir, "output directory")
      ->capture_default_str();
  tsup->add_option("--iterations", tsup_iterations, "training iterations")
      ->capture_default_str();
  tsup->add_flag("--asr-only", tsup_asr_only,
                 "train only the recognizer (label propagation retraining)");
  add_dsp_options(tsup, &tsup_dsp);
  add_asr_options(tsup, &tsup_asr);
  add_tts_options(tsup, &tsup_tts);
  add_chain_options(tsup, &tsup_chain);

  // ---- train-chain --------------------------------------------------------
  auto* tchain = app.add_subcommand(
      "train-chain", "closed-loop semi-supervised training");
  std::string tc_paired, tc_unpaired, tc_asr, tc_tts, tc_spkrec;
  std::string tc_out_dir = "chain";
  int tc_iterations = 2000;
  dsp::DspConfig tc_dsp;
  ChainConfig tc_chain;
  tchain->add_option("--paired", tc_paired, "paired manifest")->required();
  tchain->add_option("--unpaired", tc_unpaired, "unpaired manifest")
      ->required();
  tchain->add_option("--asr", tc_asr, "recognizer warm-start checkpoint")
      ->required();
  tchain->add_option("--tts", tc_tts, "synthesizer warm-start checkpoint")
      ->required();
  tchain->add_option("--spkrec", tc_spkrec, "frozen speaker encoder checkpoint")
      ->required();
  tchain->add_option("--out-dir", tc_out_dir, "output directory")
      ->capture_default_str();
  tchain->add_option("--iterations", tc_iterations, "chain iterations")
      ->capture_default_str();
  add_dsp_options(tchain, &tc_dsp);
  add_chain_options(tchain, &tc_chain);

  // ---- label-prop ---------------------------------------------------------
  auto* lp = app.add_subcommand(
      "label-prop", "pseudo-label unpaired speech with a trained recognizer");
  std::string lp_asr, lp_unpaired, lp_out = "pseudo.jsonl";
  int lp_beam = 5, lp_max_len = 24;
  dsp::DspConfig lp_dsp;
  lp->add_option("--asr", lp_asr, "recognizer checkpoint")->required();
  lp->add_option("--unpaired", lp_unpaired, "speech-only manifest")->required();
  lp->add_option("--out", lp_out, "pseudo-labeled manifest")
      ->capture_default_str();
  lp->add_option("--beam", lp_beam, "beam size")->capture_default_str();
  lp->add_option("--max-len", lp_max_len, "decode length cap")
      ->capture_default_str();
  add_dsp_options(lp, &lp_dsp);

  // ---- recognize ----------------------------------------------------------
  auto* rec = app.add_subcommand("recognize", "transcribe a wav file");
  std::string rec_asr, rec_wav;
  int rec_beam = 5, rec_max_len = 24;
  dsp::DspConfig rec_dsp;
  rec->add_option("--asr", rec_asr, "recognizer checkpoint")->required();
  rec->add_option("--wav", rec_wav, "input wav (PCM16 mono 16 kHz)")
      ->required();
  rec->add_option("--beam", rec_beam, "beam size")->capture_default_str();
  rec->add_option("--max-len", rec_max_len, "decode length cap")
      ->capture_default_str();
  add_dsp_options(rec, &rec_dsp);

  // ---- synthesize ---------------------------------------------------------
  auto* syn = app.add_subcommand(
      "synthesize", "synthesize text in the voice of a reference wav");
  std::string syn_tts, syn_spkrec, syn_text, syn_ref, syn_out = "synth.wav";
  int syn_max_frames = 400, syn_gl_iters = 60;
  dsp::DspConfig syn_dsp;
  syn->add_option("--tts", syn_tts, "synthesizer checkpoint")->required();
  syn->add_option("--spkrec", syn_spkrec, "speaker encoder checkpoint")
      ->required();
  syn->add_option("--text", syn_text, "text to speak")->required();
  syn->add_option("--ref-wav", syn_ref, "reference wav for the voice")
      ->required();
  syn->add_option("--out", syn_out, "output wav")->capture_default_str();
  syn->add_option("--max-frames", syn_max_frames, "generation cap, frames")
      ->capture_default_str();
  syn->add_option("--gl-iters", syn_gl_iters, "phase recovery iterations")
      ->capture_default_str();
  add_dsp_options(syn, &syn_dsp);

  // ---- evaluate -----------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate",
                                "score checkpoints against a manifest");
  std::string ev_manifest, ev_asr, ev_tts, ev_spkrec, ev_csv;
  int ev_beam = 5, ev_max_len = 24;
  dsp::DspConfig ev_dsp;
  ev->add_option("--manifest", ev_manifest, "test manifest")->required();
  ev->add_option("--asr", ev_asr, "recognizer checkpoint (reports CER)");
  ev->add_option("--tts", ev_tts, "synthesizer checkpoint (reports mel L2)");
  ev->add_option("--spkrec", ev_spkrec,
                 "speaker encoder checkpoint (needed with --tts)");
  ev->add_option("--beam", ev_beam, "beam size")->capture_default_str();
  ev->add_option("--max-len", ev_max_len, "decode length cap")
      ->capture_default_str();
  ev->add_option("--csv", ev_csv, "also append rows to this csv");
  add_dsp_options(ev, &ev_dsp);

  // ---- run-experiment -----------------------------------------------------
  auto* rx = app.add_subcommand(
      "run-experiment", "end-to-end scenario pipeline with a report");
  ExperimentConfig rx_cfg;
  rx->add_option("--scenario", rx_cfg.scenario,
                 "baseline-paired | upper-bound | label-prop | speech-chain | all")
      ->required();
  rx->add_option("--out-dir", rx_cfg.out_dir, "output directory")->required();
  rx->add_option("--dev-speakers", rx_cfg.dev_speakers,
                 "held-out speaker count")
      ->capture_default_str();
  rx->add_option("--dev-utts-per-speaker", rx_cfg.dev_utterances_per_speaker,
                 "held-out utterances per speaker")
      ->capture_default_str();
  rx->add_option("--paired-fraction", rx_cfg.paired_fraction,
                 "share of utterances kept paired")
      ->capture_default_str();
  rx->add_option("--supervised-iterations", rx_cfg.supervised_iterations,
                 "baseline training iterations")
      ->capture_default_str();
  rx->add_option("--upper-bound-iterations", rx_cfg.upper_bound_iterations,
                 "full-supervision training iterations")
      ->capture_default_str();
  rx->add_option("--chain-iterations", rx_cfg.chain_iterations,
                 "chain training iterations")
      ->capture_default_str();
  rx->add_option("--eval-beam", rx_cfg.eval_beam, "evaluation beam")
      ->capture_default_str();
  rx->add_option("--eval-max-len", rx_cfg.eval_max_len,
                 "evaluation decode cap")
      ->capture_default_str();
  rx->add_option("--spk-epochs", rx_cfg.spk_train.epochs,
                 "speaker encoder epochs")
      ->capture_default_str();
  add_corpus_options(rx, &rx_cfg.corpus);
  add_dsp_options(rx, &rx_cfg.dsp);
  add_asr_options(rx, &rx_cfg.asr);
  add_tts_options(rx, &rx_cfg.tts);
  add_spk_options(rx, &rx_cfg.spk);
  add_chain_options(rx, &rx_cfg.chain);

  // one flat `key = value` config file serves every subcommand; explicit
  // command-line flags override file values
  app.set_config("--config", "", "key = value config file");
  app.config_formatter(std::make_shared<FlatConfig>(&app));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gen_cfg.seed = seed;
      auto corpus = generate_synthetic_corpus(gen_cfg);
      const std::string manifest = write_corpus(corpus, gen_out);
      std::printf("wrote %zu utterances, manifest %s\n", corpus.size(),
                  manifest.c_str());
    } else if (*split_cmd) {
      auto manifest = read_manifest(split_manifest, /*load_audio=*/false);
      auto split = split_paired_unpaired(manifest, paired_fraction, disjoint,
                                         seed);
      namespace fs = std::filesystem;
      const fs::path dir = split_out_dir.empty()
                               ? fs::path(split_manifest).parent_path()
                               : fs::path(split_out_dir);
      fs::create_directories(dir.empty() ? "." : dir);
      write_manifest(split.paired, (dir / "paired.jsonl").string());
      write_manifest(split.unpaired, (dir / "unpaired.jsonl").string());
      std::printf("paired %zu utterances, unpaired %zu utterances\n",
                  split.paired.size(), split.unpaired.size());
    } else if (*tspk) {
      auto manifest = read_manifest(tspk_manifest);
      FeatureCache cache = make_cache(tspk_dsp);
      tspk_cfg.n_mels = tspk_dsp.n_mels;
      std::vector<SpeakerUtterance> data;
      std::map<std::string, int> spk_ids;
      for (const auto& u : manifest) {
        const int id = static_cast<int>(
            spk_ids.emplace(u.speaker, spk_ids.size()).first->second);
        data.push_back({id, cache.get(u).log_mel});
      }
      Rng init(seed, 1);
      SpeakerEncoder<float> enc(tspk_cfg, &init);
      tspk_train.seed = seed;
      auto losses = train_speaker_encoder(&enc, data, tspk_train);
      save_speaker_encoder(tspk_out, enc);
      std::printf("trained on %zu utterances of %zu speakers", data.size(),
                  spk_ids.size());
      if (!losses.empty())
        std::printf(", triplet loss %.4f -> %.4f", losses.front(),
                    losses.back());
      std::printf("; saved %s\n", tspk_out.c_str());
    } else if (*tsup) {
      auto paired = read_manifest(tsup_manifest);
      FeatureCache cache = make_cache(tsup_dsp);
      tsup_asr.n_mels = tsup_dsp.n_mels;
      sync_tts_dims(&tsup_tts, tsup_dsp);
      SpeakerEncoder<float> spkrec = load_speaker_encoder(tsup_spkrec);
      tsup_tts.spk_dim = spkrec.cfg.embed_dim;
      Rng arng(seed, 2), trng(seed, 3);
      AsrModel<float> asr(tsup_asr, &arng);
      TtsModel<float> tts(tsup_tts, &trng);
      tsup_chain.seed = seed;
      tsup_chain.train_tts = !tsup_asr_only;
      std::vector<MetricRow> metrics;
      train_supervised(&asr, &tts, &spkrec, &cache, paired, tsup_iterations,
                       tsup_chain, &metrics);
      namespace fs = std::filesystem;
      fs::create_directories(tsup_out_dir);
      save_asr((fs::path(tsup_out_dir) / "asr.ckpt").string(), asr);
      if (!tsup_asr_only)
        save_tts((fs::path(tsup_out_dir) / "tts.ckpt").string(), tts);
      write_metrics_csv(metrics,
                        (fs::path(tsup_out_dir) / "metrics.csv").string());
      std::printf("trained %d iterations on %zu paired utterances -> %s\n",
                  tsup_iterations, paired.size(), tsup_out_dir.c_str());
    } else if (*tchain) {
      DataSplit split;
      split.paired = read_manifest(tc_paired);
      split.unpaired = read_manifest(tc_unpaired);
      FeatureCache cache = make_cache(tc_dsp);
      AsrModel<float> asr = load_asr(tc_asr);
      TtsModel<float> tts = load_tts(tc_tts);
      SpeakerEncoder<float> spkrec = load_speaker_encoder(tc_spkrec);
      tc_chain.seed = seed;
      ChainTrainer trainer(&asr, &tts, &spkrec, &cache, tc_chain);
      trainer.run(split, tc_iterations);
      namespace fs = std::filesystem;
      fs::create_directories(tc_out_dir);
      save_asr((fs::path(tc_out_dir) / "asr.ckpt").string(), asr);
      save_tts((fs::path(tc_out_dir) / "tts.ckpt").string(), tts);
      write_metrics_csv(trainer.metrics(),
                        (fs::path(tc_out_dir) / "metrics.csv").string());
      std::printf(
          "chain trained %d iterations (skips %d, generation caps %d) -> %s\n",
          tc_iterations, trainer.stats().unpaired_speech_skips,
          trainer.stats().generation_max_frame_hits, tc_out_dir.c_str());
    } else if (*lp) {
      auto unpaired = read_manifest(lp_unpaired);
      FeatureCache cache = make_cache(lp_dsp);
      AsrModel<float> asr = load_asr(lp_asr);
      int skips = 0;
      auto pseudo =
          label_propagation(asr, unpaired, lp_beam, lp_max_len, &cache, &skips);
      write_manifest(pseudo, lp_out);
      std::printf("pseudo-labeled %zu utterances (%d skipped) -> %s\n",
                  pseudo.size(), skips, lp_out.c_str());
    } else if (*rec) {
      AsrModel<float> asr = load_asr(rec_asr);
      dsp::WavData wav = dsp::read_wav(rec_wav);
      if (wav.sample_rate != rec_dsp.sample_rate)
        throw std::runtime_error("wav sample rate does not match the config");
      FeatureCache cache = make_cache(rec_dsp);
      Utterance utt;
      utt.id = rec_wav;
      utt.samples = wav.samples;
      const auto& fs = cache.get(utt);
      const auto ids = asr.beam_decode(fs.log_mel, rec_beam, rec_max_len);
      std::printf("%s\n", decode_to_text(ids).c_str());
    } else if (*syn) {
      TtsModel<float> tts = load_tts(syn_tts);
      SpeakerEncoder<float> spkrec = load_speaker_encoder(syn_spkrec);
      dsp::WavData ref = dsp::read_wav(syn_ref);
      if (ref.sample_rate != syn_dsp.sample_rate)
        throw std::runtime_error("wav sample rate does not match the config");
      FeatureCache cache = make_cache(syn_dsp);
      Utterance utt;
      utt.id = syn_ref;
      utt.samples = ref.samples;
      ag::NoGradGuard ng;
      const ag::Tensor<float> z = spkrec.embed(cache.get(utt).log_mel);
      text::Alphabet ab;
      const int r = tts.cfg.frames_per_step;
      const int cap = (syn_max_frames + r - 1) / r * r;
      int stop_pos = 0;
      auto gen = tts.generate(ab.encode(syn_text), z, cap, &stop_pos);
      auto wave = dsp::griffin_lim(gen.linear, syn_dsp, syn_gl_iters);
      dsp::write_wav(syn_out, wave, syn_dsp.sample_rate);
      std::printf("synthesized %d frames (%.2fs) -> %s\n", stop_pos,
                  wave.size() / static_cast<double>(syn_dsp.sample_rate),
                  syn_out.c_str());
    } else if (*ev) {
      auto manifest = read_manifest(ev_manifest);
      FeatureCache cache = make_cache(ev_dsp);
      std::vector<ReportRow> rows;
      if (!ev_asr.empty()) {
        AsrModel<float> asr = load_asr(ev_asr);
        const double cer =
            evaluate_asr(asr, manifest, ev_beam, ev_max_len, &cache);
        std::printf("cer %.4f\n", cer);
        rows.push_back({"evaluate", "cer", cer});
      }
      if (!ev_tts.empty()) {
        if (ev_spkrec.empty())
          throw std::runtime_error("--tts needs --spkrec for the embeddings");
        TtsModel<float> tts = load_tts(ev_tts);
        SpeakerEncoder<float> spkrec = load_speaker_encoder(ev_spkrec);
        const double l2 = evaluate_tts(tts, spkrec, manifest, &cache);
        std::printf("tts_mel_l2 %.4f\n", l2);
        rows.push_back({"evaluate", "tts_mel_l2", l2});
      }
      if (rows.empty())
        throw std::runtime_error("nothing to evaluate: pass --asr and/or --tts");
      if (!ev_csv.empty()) write_report_csv(rows, ev_csv);
    } else if (*rx) {
      rx_cfg.seed = seed;
      rx_cfg.corpus.seed = seed;
      rx_cfg.asr.n_mels = rx_cfg.dsp.n_mels;
      sync_tts_dims(&rx_cfg.tts, rx_cfg.dsp);
      rx_cfg.tts.spk_dim = rx_cfg.spk.embed_dim;
      rx_cfg.spk.n_mels = rx_cfg.dsp.n_mels;
      auto result = run_experiment(rx_cfg);
      for (const auto& r : result.rows)
        std::printf("%-16s %-22s %.4f\n", r.scenario.c_str(), r.metric.c_str(),
                    r.value);
      std::printf("report written to %s/report.csv\n", rx_cfg.out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
