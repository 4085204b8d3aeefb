// train/chain.cc
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

#include "train/chain.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace speechchain {

const dsp::FeatureSet& FeatureCache::get(const Utterance& utt) {
  auto it = by_id_.find(utt.id);
  if (it != by_id_.end()) return it->second;
  if (utt.samples.empty())
    throw std::invalid_argument("utterance has no audio samples: " + utt.id);
  dsp::FeatureSet fs = dsp::extract_features(utt.samples, cfg_, filterbank_);
  return by_id_.emplace(utt.id, std::move(fs)).first->second;
}

PaddedTarget pad_targets(const dsp::FeatureSet& fs, int frames_per_step) {
  const int true_frames = fs.frames;
  const int padded =
      (true_frames + frames_per_step - 1) / frames_per_step * frames_per_step;
  PaddedTarget out;
  out.true_frames = true_frames;
  auto pad = [&](const ag::Tensor<float>& m) {
    if (padded == m.rows()) return m;
    std::vector<float> v = m.value();
    v.reserve(static_cast<size_t>(padded) * m.cols());
    for (int s = m.rows(); s < padded; ++s)
      for (int c = 0; c < m.cols(); ++c) v.push_back(m.at(m.rows() - 1, c));
    return ag::Tensor<float>::from(std::move(v), padded, m.cols());
  };
  out.mel = pad(fs.log_mel);
  out.linear = pad(fs.log_linear);
  out.stop_labels = build_stop_labels(true_frames, padded);
  return out;
}

void write_metrics_csv(const std::vector<MetricRow>& rows,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << "iteration,mode,loss,value\n";
  for (const auto& r : rows)
    out << r.iteration << "," << r.mode << "," << r.loss_name << ","
        << r.value << "\n";
}

ChainTrainer::ChainTrainer(AsrModel<float>* asr, TtsModel<float>* tts,
                           SpeakerEncoder<float>* spkrec,
                           FeatureCache* features, const ChainConfig& cfg)
    : asr_(asr),
      tts_(tts),
      spkrec_(spkrec),
      features_(features),
      cfg_(cfg),
      paired_rng_(cfg.seed, 0xA1),
      unpaired_speech_rng_(cfg.seed, 0xB2),
      unpaired_text_rng_(cfg.seed, 0xC3),
      pool_rng_(cfg.seed, 0xD4) {
  spkrec_->set_trainable(false);
  asr_params_ = optim::tensors_of(asr_->parameters());
  tts_params_ = optim::tensors_of(tts_->parameters());
  asr_adam_.lr = cfg_.asr_lr;
  tts_adam_.lr = cfg_.tts_lr;
  asr_adam_.init(asr_params_);
  tts_adam_.init(tts_params_);
}

std::vector<const Utterance*> ChainTrainer::sample_batch(
    const std::vector<Utterance>& data, int n, Rng* rng) const {
  std::vector<const Utterance*> batch;
  batch.reserve(n);
  for (int i = 0; i < n; ++i)
    batch.push_back(&data[static_cast<size_t>(rng->randint(data.size()))]);
  return batch;
}

ag::Tensor<float> ChainTrainer::paired_asr_loss(
    const std::vector<const Utterance*>& batch) {
  std::vector<ag::Tensor<float>> losses;
  for (const Utterance* utt : batch) {
    if (utt->text.empty())
      throw std::invalid_argument("paired utterance missing transcript: " +
                                  utt->id);
    const dsp::FeatureSet& fs = features_->get(*utt);
    const std::vector<int> ids = alphabet_.encode(utt->text);
    losses.push_back(
        asr_->nll_loss(asr_->forward_teacher_forced(fs.log_mel, ids), ids));
  }
  return ag::scale(ag::sum(ag::concat_cols(losses)),
                   1.0f / static_cast<float>(losses.size()));
}

ag::Tensor<float> ChainTrainer::paired_tts_loss(
    const std::vector<const Utterance*>& batch) {
  std::vector<ag::Tensor<float>> losses;
  for (const Utterance* utt : batch) {
    if (utt->text.empty())
      throw std::invalid_argument("paired utterance missing transcript: " +
                                  utt->id);
    const dsp::FeatureSet& fs = features_->get(*utt);
    const std::vector<int> ids = alphabet_.encode(utt->text);
    const PaddedTarget target = pad_targets(fs, tts_->cfg.frames_per_step);
    ag::Tensor<float> z;
    {
      ag::NoGradGuard ng;
      z = spkrec_->embed(fs.log_mel);
    }
    auto pred = tts_->forward_teacher_forced(ids, target.mel, z,
                                             target.true_frames);
    losses.push_back(tts_loss<float>(pred, target.mel, target.linear,
                                     target.stop_labels, target.true_frames,
                                     z, *spkrec_, cfg_.tts_weights));
  }
  return ag::scale(ag::sum(ag::concat_cols(losses)),
                   1.0f / static_cast<float>(losses.size()));
}

std::optional<ag::Tensor<float>> ChainTrainer::unpaired_speech_loss(
    const std::vector<const Utterance*>& batch) {
  std::vector<ag::Tensor<float>> losses;
  for (const Utterance* utt : batch) {
    const dsp::FeatureSet& fs = features_->get(*utt);
    const std::vector<int> hyp =
        asr_->beam_decode(fs.log_mel, cfg_.decode_beam, cfg_.max_decode_len);
    if (hyp.empty()) {
      ++stats_.unpaired_speech_skips;
      continue;
    }
    std::vector<int> ids;
    ids.reserve(hyp.size() + 2);
    ids.push_back(asr_->cfg.sos_id);
    ids.insert(ids.end(), hyp.begin(), hyp.end());
    ids.push_back(asr_->cfg.eos_id);

    const PaddedTarget target = pad_targets(fs, tts_->cfg.frames_per_step);
    ag::Tensor<float> z;
    {
      ag::NoGradGuard ng;
      z = spkrec_->embed(fs.log_mel);
    }
    auto pred = tts_->forward_teacher_forced(ids, target.mel, z,
                                             target.true_frames);
    losses.push_back(tts_loss<float>(pred, target.mel, target.linear,
                                     target.stop_labels, target.true_frames,
                                     z, *spkrec_, cfg_.tts_weights));
  }
  if (losses.empty()) return std::nullopt;
  return ag::scale(ag::sum(ag::concat_cols(losses)),
                   1.0f / static_cast<float>(losses.size()));
}

ag::Tensor<float> ChainTrainer::unpaired_text_loss(
    const std::vector<const Utterance*>& batch,
    const std::vector<const Utterance*>& speech_pool) {
  if (speech_pool.empty())
    throw std::invalid_argument("unpaired text step needs a speech pool");
  std::vector<ag::Tensor<float>> losses;
  for (const Utterance* utt : batch) {
    const Utterance* sampled =
        speech_pool[static_cast<size_t>(pool_rng_.randint(speech_pool.size()))];
    const dsp::FeatureSet& sampled_fs = features_->get(*sampled);
    ag::Tensor<float> z;
    {
      ag::NoGradGuard ng;
      z = spkrec_->embed(sampled_fs.log_mel);
    }
    const std::vector<int> ids = alphabet_.encode(utt->text);
    int stop_pos = 0;
    auto gen = tts_->generate(ids, z, cfg_.max_gen_frames, &stop_pos);
    if (stop_pos >= cfg_.max_gen_frames) ++stats_.generation_max_frame_hits;
    // generation ran without gradients: its output is a constant input here
    losses.push_back(asr_->nll_loss(
        asr_->forward_teacher_forced(gen.mel, ids), ids));
  }
  return ag::scale(ag::sum(ag::concat_cols(losses)),
                   1.0f / static_cast<float>(losses.size()));
}

void ChainTrainer::apply_update(const ag::Tensor<float>& total_loss) {
  optim::zero_grads(&asr_params_);
  optim::zero_grads(&tts_params_);
  total_loss.backward();
  if (cfg_.train_asr) {
    optim::clip_grad_norm(&asr_params_, cfg_.grad_clip);
    optim::adam_step(&asr_params_, &asr_adam_);
  }
  if (cfg_.train_tts) {
    optim::clip_grad_norm(&tts_params_, cfg_.grad_clip);
    optim::adam_step(&tts_params_, &tts_adam_);
  }
  optim::zero_grads(&asr_params_);
  optim::zero_grads(&tts_params_);
}

void ChainTrainer::run(const DataSplit& split, int iterations) {
  if (cfg_.alpha > 0.0f && split.paired.empty())
    throw std::invalid_argument("chain: alpha > 0 with an empty paired split");
  const bool use_paired = cfg_.alpha != 0.0f && !split.paired.empty();
  const bool use_unpaired = cfg_.beta != 0.0f && !split.unpaired.empty();

  std::vector<const Utterance*> pool;
  if (use_unpaired) {
    for (const auto& u : split.paired) pool.push_back(&u);
    for (const auto& u : split.unpaired) pool.push_back(&u);
  }

  for (int it = 0; it < iterations; ++it) {
    std::vector<ag::Tensor<float>> weighted;
    auto log_row = [&](const char* mode, const char* name, double v) {
      metrics_.push_back({it, mode, name, v});
    };

    ag::Tensor<float> paired_part, unpaired_part;
    if (use_paired) {
      const auto batch =
          sample_batch(split.paired, cfg_.batch_paired, &paired_rng_);
      ag::Tensor<float> asr_l, tts_l;
      if (cfg_.train_asr) {
        asr_l = paired_asr_loss(batch);
        log_row("paired", "asr_nll", asr_l.item());
      }
      if (cfg_.train_tts) {
        tts_l = paired_tts_loss(batch);
        log_row("paired", "tts_loss", tts_l.item());
      }
      if (asr_l.defined() && tts_l.defined())
        paired_part = ag::add(asr_l, tts_l);
      else if (asr_l.defined())
        paired_part = asr_l;
      else if (tts_l.defined())
        paired_part = tts_l;
    }
    if (use_unpaired) {
      std::optional<ag::Tensor<float>> speech_l;
      if (cfg_.train_tts) {
        const auto batch = sample_batch(
            split.unpaired, cfg_.batch_unpaired_speech, &unpaired_speech_rng_);
        speech_l = unpaired_speech_loss(batch);
        if (speech_l) log_row("unpaired_speech", "tts_loss", speech_l->item());
      }
      ag::Tensor<float> text_l;
      if (cfg_.train_asr) {
        const auto batch = sample_batch(
            split.unpaired, cfg_.batch_unpaired_text, &unpaired_text_rng_);
        text_l = unpaired_text_loss(batch, pool);
        log_row("unpaired_text", "asr_nll", text_l.item());
      }
      if (speech_l && text_l.defined())
        unpaired_part = ag::add(*speech_l, text_l);
      else if (speech_l)
        unpaired_part = *speech_l;
      else if (text_l.defined())
        unpaired_part = text_l;
    }

    ag::Tensor<float> total;
    if (paired_part.defined())
      total = ag::scale(paired_part, cfg_.alpha);
    if (unpaired_part.defined()) {
      ag::Tensor<float> u = ag::scale(unpaired_part, cfg_.beta);
      total = total.defined() ? ag::add(total, u) : u;
    }
    if (!total.defined()) continue;
    if (!std::isfinite(total.item())) {
      ++stats_.aborted_steps;
      std::fprintf(stderr,
                   "chain: non-finite loss at iteration %d, step skipped\n",
                   it);
      continue;
    }
    apply_update(total);
  }
}

void train_supervised(AsrModel<float>* asr, TtsModel<float>* tts,
                      SpeakerEncoder<float>* spkrec, FeatureCache* features,
                      const std::vector<Utterance>& paired, int iterations,
                      ChainConfig cfg, std::vector<MetricRow>* metrics_out) {
  cfg.beta = 0.0f;
  ChainTrainer trainer(asr, tts, spkrec, features, cfg);
  DataSplit split;
  split.paired = paired;
  trainer.run(split, iterations);
  if (metrics_out) *metrics_out = trainer.metrics();
}

}  // namespace speechchain
