// models/speaker_encoder.h
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

#ifndef SPEECHCHAIN_MODELS_SPEAKER_ENCODER_H_
#define SPEECHCHAIN_MODELS_SPEAKER_ENCODER_H_

// Speaker embedding network: two strided 1-D convolutions over the log-mel
// frames, LReLU, temporal mean pooling, an affine projection and L2
// normalization. The embedding contract is a unit-norm vector whose cosine
// similarity is high for same-speaker pairs; the network is trained on
// paired data only and frozen inside the chain loop.

#include <stdexcept>
#include <string>

#include "core/nn.h"
#include "core/rng.h"
#include "core/tensor.h"

namespace speechchain {

struct SpeakerEncoderConfig {
  int n_mels = 80;
  int conv_channels = 64;
  int conv_width = 5;
  int embed_dim = 64;
};

template <typename T>
struct SpeakerEncoder {
  SpeakerEncoderConfig cfg;
  nn::Conv1d<T> conv1;
  nn::Conv1d<T> conv2;
  nn::Linear<T> proj;

  SpeakerEncoder() = default;
  SpeakerEncoder(const SpeakerEncoderConfig& config, Rng* rng)
      : cfg(config),
        conv1(config.n_mels, config.conv_channels, config.conv_width, 2, rng),
        conv2(config.conv_channels, config.conv_channels, config.conv_width, 2, rng),
        proj(config.conv_channels, config.embed_dim, rng) {}

  // [frames x n_mels] -> [1 x embed_dim], unit L2 norm.
  ag::Tensor<T> embed(const ag::Tensor<T>& log_mel) const {
    if (log_mel.rows() < 1)
      throw std::invalid_argument("embed: zero-frame input");
    if (log_mel.cols() != cfg.n_mels)
      throw std::invalid_argument("embed: wrong mel width");
    ag::Tensor<T> h = ag::lrelu(conv1.forward(log_mel));
    h = ag::lrelu(conv2.forward(h));
    // temporal mean pool as a constant [1 x T'] averaging matrix
    const int t = h.rows();
    ag::Tensor<T> avg =
        ag::Tensor<T>::filled(1, t, T(1) / static_cast<T>(t));
    ag::Tensor<T> pooled = ag::matmul(avg, h);
    return ag::l2_normalize(proj.forward(pooled));
  }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> out;
    conv1.collect("spk.conv1", &out);
    conv2.collect("spk.conv2", &out);
    proj.collect("spk.proj", &out);
    return out;
  }

  void set_trainable(bool trainable) {
    for (auto& nt : parameters()) nt.tensor.set_requires_grad(trainable);
  }
};

template <typename T>
ag::Tensor<T> cosine_distance(const ag::Tensor<T>& a, const ag::Tensor<T>& b) {
  return ag::one_minus(ag::cosine_similarity(a, b));
}

}  // namespace speechchain

#endif  // SPEECHCHAIN_MODELS_SPEAKER_ENCODER_H_
