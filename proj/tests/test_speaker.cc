// tests/test_speaker.cc
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

#include <cmath>

#include "gradcheck.h"
#include "models/speaker_encoder.h"
#include "train/speaker_trainer.h"

using namespace speechchain;
using ag::Tensor;

namespace {

SpeakerEncoderConfig tiny_cfg() {
  SpeakerEncoderConfig cfg;
  cfg.n_mels = 6;
  cfg.conv_channels = 8;
  cfg.conv_width = 3;
  cfg.embed_dim = 5;
  return cfg;
}

// Constant-spectrum utterance with a per-speaker profile.
Tensor<float> toy_utterance(int frames, int n_mels, float base, Rng* rng) {
  std::vector<float> v(static_cast<size_t>(frames) * n_mels);
  for (int t = 0; t < frames; ++t)
    for (int m = 0; m < n_mels; ++m)
      v[static_cast<size_t>(t) * n_mels + m] =
          base * (m + 1) * 0.1f + static_cast<float>(rng->uniform(-0.02, 0.02));
  return Tensor<float>::from(std::move(v), frames, n_mels);
}

}  // namespace

TEST_CASE("embeddings are unit norm regardless of input") {
  Rng rng(3);
  SpeakerEncoder<double> enc(tiny_cfg(), &rng);
  for (int trial = 0; trial < 20; ++trial) {
    const int frames = 1 + static_cast<int>(rng.randint(30));
    auto x = testing::random_tensor(frames, 6, &rng, -8.0, 2.0, false);
    auto z = enc.embed(x);
    CHECK(z.rows() == 1);
    CHECK(z.cols() == 5);
    double norm = 0;
    for (double v : z.value()) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("embedding is deterministic") {
  Rng rng(5);
  SpeakerEncoder<double> enc(tiny_cfg(), &rng);
  auto x = testing::random_tensor(12, 6, &rng, -4.0, 1.0, false);
  auto a = enc.embed(x);
  auto b = enc.embed(x);
  CHECK(a.value() == b.value());
}

TEST_CASE("zero-frame input is rejected") {
  Rng rng(7);
  SpeakerEncoder<double> enc(tiny_cfg(), &rng);
  auto empty = Tensor<double>::zeros(0, 6);
  CHECK_THROWS(enc.embed(empty));
}

TEST_CASE("embed gradients match finite differences") {
  Rng rng(11);
  SpeakerEncoder<double> enc(tiny_cfg(), &rng);
  auto x = testing::random_tensor(5, 6, &rng);
  auto target = testing::random_tensor(1, 5, &rng, -1, 1, false);
  auto params = optim::tensors_of(enc.parameters());
  params.push_back(x);
  const double err = testing::max_grad_rel_error(
      params, [&] { return ag::sum(ag::mul(enc.embed(x), target)); },
      24, &rng);
  CHECK(err < 1e-4);
}

TEST_CASE("cosine similarity basics") {
  auto v = ag::l2_normalize(Tensor<double>::from({1, 2, 2}, 1, 3));
  CHECK(ag::cosine_similarity(v, v).item() == doctest::Approx(1.0));
  CHECK(cosine_distance(v, v).item() == doctest::Approx(0.0).epsilon(1e-9));

  auto a = Tensor<double>::from({1, 0}, 1, 2);
  auto b = Tensor<double>::from({0, 1}, 1, 2);
  CHECK(ag::cosine_similarity(a, b).item() == doctest::Approx(0.0));
  CHECK(cosine_distance(a, b).item() == doctest::Approx(1.0));

  auto na = ag::neg(a);
  CHECK(ag::cosine_similarity(a, na).item() == doctest::Approx(-1.0));
  CHECK(cosine_distance(a, na).item() == doctest::Approx(2.0));
}

TEST_CASE("training separates two toy speakers") {
  Rng rng(13);
  std::vector<SpeakerUtterance> data;
  for (int u = 0; u < 8; ++u) {
    data.push_back({0, toy_utterance(10, 6, 1.0f, &rng)});
    data.push_back({1, toy_utterance(10, 6, -1.0f, &rng)});
  }
  Rng init(1);
  SpeakerEncoder<float> enc(tiny_cfg(), &init);
  SpeakerTrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 7;
  auto losses = train_speaker_encoder(&enc, data, cfg);
  REQUIRE(losses.size() == 15);
  CHECK(losses.back() < losses.front());

  // same-speaker cosine above cross-speaker cosine on fresh utterances
  auto a0 = enc.embed(toy_utterance(10, 6, 1.0f, &rng));
  auto a1 = enc.embed(toy_utterance(10, 6, 1.0f, &rng));
  auto b0 = enc.embed(toy_utterance(10, 6, -1.0f, &rng));
  const double same = ag::cosine_similarity(a0, a1).item();
  const double cross = ag::cosine_similarity(a0, b0).item();
  CHECK(same > cross);
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  auto run = [] {
    Rng rng(17);
    std::vector<SpeakerUtterance> data;
    for (int u = 0; u < 4; ++u) {
      data.push_back({0, toy_utterance(8, 6, 1.0f, &rng)});
      data.push_back({1, toy_utterance(8, 6, -0.5f, &rng)});
    }
    Rng init(2);
    SpeakerEncoder<float> enc(tiny_cfg(), &init);
    SpeakerTrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 11;
    train_speaker_encoder(&enc, data, cfg);
    std::vector<float> flat;
    for (auto& nt : enc.parameters())
      flat.insert(flat.end(), nt.tensor.value().begin(),
                  nt.tensor.value().end());
    return flat;
  };
  CHECK(run() == run());
}

TEST_CASE("zero epochs leaves the initialization untouched") {
  Rng rng(19);
  std::vector<SpeakerUtterance> data;
  for (int u = 0; u < 3; ++u) {
    data.push_back({0, toy_utterance(8, 6, 1.0f, &rng)});
    data.push_back({1, toy_utterance(8, 6, -1.0f, &rng)});
  }
  Rng init(3);
  SpeakerEncoder<float> enc(tiny_cfg(), &init);
  std::vector<float> before;
  for (auto& nt : enc.parameters())
    before.insert(before.end(), nt.tensor.value().begin(),
                  nt.tensor.value().end());
  SpeakerTrainConfig cfg;
  cfg.epochs = 0;
  auto losses = train_speaker_encoder(&enc, data, cfg);
  CHECK(losses.empty());
  std::vector<float> after;
  for (auto& nt : enc.parameters())
    after.insert(after.end(), nt.tensor.value().begin(),
                 nt.tensor.value().end());
  CHECK(before == after);
}

TEST_CASE("single-speaker datasets are rejected") {
  Rng rng(23);
  std::vector<SpeakerUtterance> data;
  data.push_back({0, toy_utterance(8, 6, 1.0f, &rng)});
  data.push_back({0, toy_utterance(8, 6, 1.0f, &rng)});
  Rng init(4);
  SpeakerEncoder<float> enc(tiny_cfg(), &init);
  SpeakerTrainConfig cfg;
  CHECK_THROWS_AS(train_speaker_encoder(&enc, data, cfg),
                  std::invalid_argument);
}

TEST_CASE("frozen encoder accumulates no parameter gradients") {
  Rng rng(29);
  SpeakerEncoder<double> enc(tiny_cfg(), &rng);
  enc.set_trainable(false);
  auto x = testing::random_tensor(6, 6, &rng, -1, 1, true);
  auto z = enc.embed(x);
  ag::sum(z).backward();
  // gradient still flows through the encoder into its input
  bool any_input_grad = false;
  for (double g : x.grad())
    if (g != 0.0) any_input_grad = true;
  CHECK(any_input_grad);
  for (auto& nt : enc.parameters()) CHECK_FALSE(nt.tensor.has_grad());
}
