// train/experiment.cc
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

#include "train/experiment.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "models/model_io.h"
#include "text/alphabet.h"

namespace speechchain {

namespace {

text::Alphabet g_alphabet;

std::vector<float> flatten_params(nn::ParamList<float> params) {
  std::vector<float> out;
  for (auto& nt : params)
    out.insert(out.end(), nt.tensor.value().begin(), nt.tensor.value().end());
  return out;
}

void copy_params(nn::ParamList<float> from, nn::ParamList<float> to) {
  if (from.size() != to.size())
    throw std::runtime_error("parameter lists differ");
  for (size_t i = 0; i < from.size(); ++i)
    to[i].tensor.mutable_value() = from[i].tensor.value();
}

}  // namespace

double evaluate_asr(const AsrModel<float>& asr,
                    const std::vector<Utterance>& test, int beam, int max_len,
                    FeatureCache* features) {
  if (test.empty()) throw std::invalid_argument("evaluate_asr: empty test set");
  size_t total_edit = 0, total_ref = 0;
  for (const auto& utt : test) {
    if (utt.text.empty())
      throw std::invalid_argument("evaluate_asr: utterance without reference");
    const dsp::FeatureSet& fs = features->get(utt);
    const std::vector<int> hyp_ids =
        asr.beam_decode(fs.log_mel, beam, max_len);
    std::vector<int> framed{text::Alphabet::kSosId};
    framed.insert(framed.end(), hyp_ids.begin(), hyp_ids.end());
    framed.push_back(text::Alphabet::kEosId);
    const std::string hyp = g_alphabet.decode(framed);
    total_edit += text::edit_distance(utt.text, hyp);
    total_ref += utt.text.size();
  }
  return static_cast<double>(total_edit) / static_cast<double>(total_ref);
}

double evaluate_tts(const TtsModel<float>& tts,
                    const SpeakerEncoder<float>& spkrec,
                    const std::vector<Utterance>& test,
                    FeatureCache* features) {
  if (test.empty()) throw std::invalid_argument("evaluate_tts: empty test set");
  ag::NoGradGuard ng;
  double total = 0.0;
  for (const auto& utt : test) {
    const dsp::FeatureSet& fs = features->get(utt);
    const PaddedTarget target = pad_targets(fs, tts.cfg.frames_per_step);
    const ag::Tensor<float> z = spkrec.embed(fs.log_mel);
    const std::vector<int> ids = g_alphabet.encode(utt.text);
    auto pred =
        tts.forward_teacher_forced(ids, target.mel, z, target.true_frames);
    double l2 = 0.0;
    for (int s = 0; s < target.true_frames; ++s)
      for (int m = 0; m < tts.cfg.n_mels; ++m) {
        const double d = pred.mel.at(s, m) - target.mel.at(s, m);
        l2 += d * d;
      }
    total += l2 / target.true_frames;
  }
  return total / static_cast<double>(test.size());
}

std::vector<Utterance> label_propagation(const AsrModel<float>& asr,
                                         const std::vector<Utterance>& unpaired,
                                         int beam, int max_len,
                                         FeatureCache* features, int* skips) {
  std::vector<Utterance> out;
  int skipped = 0;
  for (const auto& utt : unpaired) {
    const dsp::FeatureSet& fs = features->get(utt);
    const std::vector<int> hyp_ids =
        asr.beam_decode(fs.log_mel, beam, max_len);
    if (hyp_ids.empty()) {
      ++skipped;
      continue;
    }
    std::vector<int> framed{text::Alphabet::kSosId};
    framed.insert(framed.end(), hyp_ids.begin(), hyp_ids.end());
    framed.push_back(text::Alphabet::kEosId);
    Utterance pseudo = utt;
    pseudo.text = g_alphabet.decode(framed);
    out.push_back(std::move(pseudo));
  }
  if (skips) *skips = skipped;
  return out;
}

double one_shot_adaptation_rate(const TtsModel<float>& tts,
                                const SpeakerEncoder<float>& spkrec,
                                const std::vector<Utterance>& dev,
                                FeatureCache* features, int max_gen_frames) {
  ag::NoGradGuard ng;
  std::map<std::string, std::vector<const Utterance*>> by_speaker;
  for (const auto& u : dev) by_speaker[u.speaker].push_back(&u);
  if (by_speaker.size() < 2)
    throw std::invalid_argument("one-shot check needs at least two speakers");

  // per-speaker centroid of embeddings over their dev utterances
  std::map<std::string, std::vector<float>> centroid;
  for (const auto& [spk, utts] : by_speaker) {
    std::vector<float> mean(spkrec.cfg.embed_dim, 0.0f);
    for (const Utterance* u : utts) {
      const auto z = spkrec.embed(features->get(*u).log_mel);
      for (int i = 0; i < spkrec.cfg.embed_dim; ++i) mean[i] += z.value()[i];
    }
    float norm = 0.0f;
    for (float v : mean) norm += v * v;
    norm = std::sqrt(std::max(norm, 1e-12f));
    for (float& v : mean) v /= norm;
    centroid[spk] = std::move(mean);
  }

  auto cosine = [](const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  };

  int passed = 0;
  for (const auto& [spk, utts] : by_speaker) {
    const Utterance* cond = utts.front();  // the one-shot sample
    const auto z_cond = spkrec.embed(features->get(*cond).log_mel);
    const std::vector<int> ids = g_alphabet.encode(cond->text);
    auto gen = tts.generate(ids, z_cond, max_gen_frames);
    const auto z_hat = spkrec.embed(gen.mel);
    const double own = cosine(z_hat.value(), z_cond.value());
    bool win = true;
    for (const auto& [other, c] : centroid) {
      if (other == spk) continue;
      if (cosine(z_hat.value(), c) >= own) {
        win = false;
        break;
      }
    }
    if (win) ++passed;
  }
  return static_cast<double>(passed) / static_cast<double>(by_speaker.size());
}

void write_report_csv(const std::vector<ReportRow>& rows,
                      const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "scenario,metric,value\n";
  for (const auto& r : rows)
    out << r.scenario << "," << r.metric << "," << r.value << "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  static const std::set<std::string> kScenarios{
      "baseline-paired", "upper-bound", "label-prop", "speech-chain", "all"};
  if (!kScenarios.count(cfg.scenario))
    throw std::invalid_argument("unknown scenario: " + cfg.scenario);
  const bool all = cfg.scenario == "all";
  auto wants = [&](const std::string& s) { return all || cfg.scenario == s; };

  // corpus: training speakers plus a held-out dev range of unseen voices
  std::vector<Utterance> train = generate_synthetic_corpus(cfg.corpus);
  SynthCorpusConfig dev_cfg = cfg.corpus;
  dev_cfg.speaker_index_offset = cfg.corpus.speaker_index_offset +
                                 cfg.corpus.n_speakers;
  dev_cfg.n_speakers = cfg.dev_speakers;
  dev_cfg.utterances_per_speaker = cfg.dev_utterances_per_speaker;
  std::vector<Utterance> dev = generate_synthetic_corpus(dev_cfg);

  DataSplit split = split_paired_unpaired(train, cfg.paired_fraction,
                                          cfg.disjoint_speakers, cfg.seed);

  FeatureCache features(cfg.dsp, dsp::mel_filterbank(cfg.dsp));

  // speaker encoder: paired split only, then frozen everywhere
  Rng spk_init(cfg.seed ^ 0x5eedULL, 1);
  SpeakerEncoder<float> spkrec(cfg.spk, &spk_init);
  {
    std::vector<SpeakerUtterance> spk_data;
    std::map<std::string, int> spk_ids;
    for (const auto& u : split.paired) {
      const int id = static_cast<int>(
          spk_ids.emplace(u.speaker, spk_ids.size()).first->second);
      spk_data.push_back({id, features.get(u).log_mel});
    }
    SpeakerTrainConfig st = cfg.spk_train;
    st.seed = cfg.seed ^ 0x5eedULL;
    train_speaker_encoder(&spkrec, spk_data, st);
  }

  ExperimentResult result;
  auto report = [&](const std::string& scenario, const std::string& metric,
                    double value) {
    result.rows.push_back({scenario, metric, value});
  };

  auto make_asr = [&](uint64_t salt) {
    Rng rng(cfg.seed ^ salt, 2);
    return AsrModel<float>(cfg.asr, &rng);
  };
  auto make_tts = [&](uint64_t salt) {
    Rng rng(cfg.seed ^ salt, 3);
    return TtsModel<float>(cfg.tts, &rng);
  };

  namespace fs = std::filesystem;
  const bool persist = !cfg.out_dir.empty();
  if (persist) fs::create_directories(cfg.out_dir);
  auto out_path = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  // ---- baseline: paired-only supervised training -------------------------
  // (also the warm start for label-prop and the chain scenario)
  AsrModel<float> baseline_asr = make_asr(0xBA5E);
  TtsModel<float> baseline_tts = make_tts(0xBA5E);
  const bool need_baseline =
      wants("baseline-paired") || wants("label-prop") || wants("speech-chain");
  if (need_baseline) {
    ChainConfig sup = cfg.chain;
    sup.seed = cfg.seed ^ 0xBA5E;
    std::vector<MetricRow> metrics;
    train_supervised(&baseline_asr, &baseline_tts, &spkrec, &features,
                     split.paired, cfg.supervised_iterations, sup, &metrics);
    if (persist)
      write_metrics_csv(metrics, out_path("baseline_metrics.csv"));
  }
  if (wants("baseline-paired")) {
    report("baseline-paired", "dev_cer",
           evaluate_asr(baseline_asr, dev, cfg.eval_beam, cfg.eval_max_len,
                        &features));
    report("baseline-paired", "dev_tts_l2",
           evaluate_tts(baseline_tts, spkrec, dev, &features));
    if (persist) {
      save_asr(out_path("baseline_asr.ckpt"), baseline_asr);
      save_tts(out_path("baseline_tts.ckpt"), baseline_tts);
    }
  }

  // ---- upper bound: everything paired ------------------------------------
  if (wants("upper-bound")) {
    AsrModel<float> ub_asr = make_asr(0x0bb1);
    TtsModel<float> ub_tts = make_tts(0x0bb1);
    std::vector<Utterance> full = split.paired;
    full.insert(full.end(), split.unpaired.begin(), split.unpaired.end());
    ChainConfig sup = cfg.chain;
    sup.seed = cfg.seed ^ 0x0bb1;
    train_supervised(&ub_asr, &ub_tts, &spkrec, &features, full,
                     cfg.upper_bound_iterations, sup, nullptr);
    report("upper-bound", "dev_cer",
           evaluate_asr(ub_asr, dev, cfg.eval_beam, cfg.eval_max_len,
                        &features));
    report("upper-bound", "dev_tts_l2",
           evaluate_tts(ub_tts, spkrec, dev, &features));
    if (persist) {
      save_asr(out_path("upper_bound_asr.ckpt"), ub_asr);
      save_tts(out_path("upper_bound_tts.ckpt"), ub_tts);
    }
  }

  // ---- label propagation --------------------------------------------------
  if (wants("label-prop")) {
    int skips = 0;
    std::vector<Utterance> pseudo =
        label_propagation(baseline_asr, split.unpaired, cfg.eval_beam,
                          cfg.eval_max_len, &features, &skips);
    if (persist) write_manifest(pseudo, out_path("label_prop.jsonl"));
    std::vector<Utterance> augmented = split.paired;
    augmented.insert(augmented.end(), pseudo.begin(), pseudo.end());
    AsrModel<float> lp_asr = make_asr(0x1ab1);
    TtsModel<float> lp_tts = make_tts(0x1ab1);  // untrained; asr-only run
    ChainConfig sup = cfg.chain;
    sup.seed = cfg.seed ^ 0x1ab1;
    sup.train_tts = false;
    train_supervised(&lp_asr, &lp_tts, &spkrec, &features, augmented,
                     cfg.upper_bound_iterations, sup, nullptr);
    report("label-prop", "dev_cer",
           evaluate_asr(lp_asr, dev, cfg.eval_beam, cfg.eval_max_len,
                        &features));
    report("label-prop", "pseudo_label_skips", skips);
    if (persist) save_asr(out_path("label_prop_asr.ckpt"), lp_asr);
  }

  // ---- speech chain -------------------------------------------------------
  if (wants("speech-chain")) {
    AsrModel<float> chain_asr = make_asr(0xBA5E);
    TtsModel<float> chain_tts = make_tts(0xBA5E);
    copy_params(baseline_asr.parameters(), chain_asr.parameters());
    copy_params(baseline_tts.parameters(), chain_tts.parameters());

    const std::vector<float> spk_before = flatten_params(spkrec.parameters());
    ChainConfig ch = cfg.chain;
    ch.seed = cfg.seed ^ 0xC4A1;
    ChainTrainer trainer(&chain_asr, &chain_tts, &spkrec, &features, ch);
    trainer.run(split, cfg.chain_iterations);
    if (flatten_params(spkrec.parameters()) != spk_before)
      throw std::runtime_error("speaker encoder changed during chain training");

    result.chain_metrics = trainer.metrics();
    report("speech-chain", "dev_cer",
           evaluate_asr(chain_asr, dev, cfg.eval_beam, cfg.eval_max_len,
                        &features));
    report("speech-chain", "dev_tts_l2",
           evaluate_tts(chain_tts, spkrec, dev, &features));
    report("speech-chain", "one_shot_rate",
           one_shot_adaptation_rate(chain_tts, spkrec, dev, &features,
                                    cfg.chain.max_gen_frames));
    report("speech-chain", "unpaired_speech_skips",
           trainer.stats().unpaired_speech_skips);
    if (persist) {
      write_metrics_csv(trainer.metrics(), out_path("chain_metrics.csv"));
      save_asr(out_path("chain_asr.ckpt"), chain_asr);
      save_tts(out_path("chain_tts.ckpt"), chain_tts);
      save_speaker_encoder(out_path("spkrec.ckpt"), spkrec);
    }
  }

  if (persist) write_report_csv(result.rows, out_path("report.csv"));
  return result;
}

}  // namespace speechchain
