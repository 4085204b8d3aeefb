// train/speaker_trainer.h
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

#ifndef SPEECHCHAIN_TRAIN_SPEAKER_TRAINER_H_
#define SPEECHCHAIN_TRAIN_SPEAKER_TRAINER_H_

// Trains the speaker encoder with a cosine-margin triplet objective:
// anchor/positive from one speaker, negative from another.

#include <map>
#include <stdexcept>
#include <vector>

#include "core/optim.h"
#include "core/rng.h"
#include "models/speaker_encoder.h"

namespace speechchain {

struct SpeakerUtterance {
  int speaker = 0;
  ag::Tensor<float> log_mel;
};

struct SpeakerTrainConfig {
  int epochs = 10;
  int triplets_per_batch = 16;
  int batches_per_epoch = 8;
  float lr = 1e-3f;  // speaker-model optimizer rate
  float margin = 0.2f;
  float grad_clip = 5.0f;
  uint64_t seed = 0;
};

// Returns the mean triplet loss per epoch. epochs == 0 leaves the encoder
// untouched.
inline std::vector<float> train_speaker_encoder(
    SpeakerEncoder<float>* encoder, const std::vector<SpeakerUtterance>& data,
    const SpeakerTrainConfig& cfg) {
  std::map<int, std::vector<const SpeakerUtterance*>> by_speaker;
  for (const auto& u : data) by_speaker[u.speaker].push_back(&u);
  if (by_speaker.size() < 2)
    throw std::invalid_argument(
        "train_speaker_encoder: need at least two speakers");
  for (const auto& [spk, utts] : by_speaker)
    if (utts.size() < 2)
      throw std::invalid_argument(
          "train_speaker_encoder: need at least two utterances per speaker");

  std::vector<int> speakers;
  for (const auto& [spk, utts] : by_speaker) speakers.push_back(spk);

  nn::ParamList<float> named = encoder->parameters();
  std::vector<ag::Tensor<float>> params = optim::tensors_of(named);
  optim::AdamState<float> adam;
  adam.lr = cfg.lr;
  adam.init(params);
  Rng rng(cfg.seed, /*stream=*/0x5e11);

  std::vector<float> epoch_losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      std::vector<ag::Tensor<float>> terms;
      for (int t = 0; t < cfg.triplets_per_batch; ++t) {
        const int si = static_cast<int>(rng.randint(speakers.size()));
        const auto& pos_utts = by_speaker[speakers[si]];
        const int ai = static_cast<int>(rng.randint(pos_utts.size()));
        int pi = static_cast<int>(rng.randint(pos_utts.size() - 1));
        if (pi >= ai) ++pi;
        int sj = static_cast<int>(rng.randint(speakers.size() - 1));
        if (sj >= si) ++sj;
        const auto& neg_utts = by_speaker[speakers[sj]];
        const int ni = static_cast<int>(rng.randint(neg_utts.size()));

        ag::Tensor<float> a = encoder->embed(pos_utts[ai]->log_mel);
        ag::Tensor<float> p = encoder->embed(pos_utts[pi]->log_mel);
        ag::Tensor<float> n = encoder->embed(neg_utts[ni]->log_mel);
        ag::Tensor<float> hinge = ag::lrelu(
            ag::add_scalar(ag::sub(ag::cosine_similarity(a, n),
                                   ag::cosine_similarity(a, p)),
                           cfg.margin),
            0.0f);
        terms.push_back(hinge);
      }
      ag::Tensor<float> loss =
          ag::scale(ag::sum(ag::concat_cols(terms)),
                    1.0f / static_cast<float>(terms.size()));
      optim::zero_grads(&params);
      loss.backward();
      optim::clip_grad_norm(&params, cfg.grad_clip);
      optim::adam_step(&params, &adam);
      epoch_loss += loss.item();
    }
    epoch_losses.push_back(
        static_cast<float>(epoch_loss / cfg.batches_per_epoch));
  }
  return epoch_losses;
}

}  // namespace speechchain

#endif  // SPEECHCHAIN_TRAIN_SPEAKER_TRAINER_H_
