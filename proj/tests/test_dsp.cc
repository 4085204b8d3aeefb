// tests/test_dsp.cc
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
#include <cstdio>
#include <vector>

#include "core/rng.h"
#include "dsp/dsp.h"
#include "dsp/wav.h"

using namespace speechchain;
using dsp::DspConfig;

namespace {

std::vector<float> sine_wave(double freq_hz, double seconds, int sample_rate,
                             double amplitude = 0.5) {
  const int n = static_cast<int>(seconds * sample_rate);
  std::vector<float> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = static_cast<float>(
        amplitude * std::sin(2.0 * 3.14159265358979323846 * freq_hz * i / sample_rate));
  return w;
}

// PCM16-quantized random signal at float64, the representation every real
// input of the pipeline has.
std::vector<double> random_pcm16_signal(int n, Rng* rng) {
  std::vector<double> w(n);
  for (auto& v : w)
    v = static_cast<double>(rng->randint(65536) - 32768) / 32768.0;
  return w;
}

}  // namespace

TEST_CASE("preemphasis basics") {
  std::vector<double> constant{1, 1, 1};
  auto y = dsp::preemphasize(constant, 0.97);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(0.03));
  CHECK(y[2] == doctest::Approx(0.03));

  Rng rng(1);
  auto x = random_pcm16_signal(64, &rng);
  CHECK(dsp::preemphasize(x, 0.0) == x);

  std::vector<double> zeros(16, 0.0);
  auto z = dsp::preemphasize(zeros, 0.97);
  for (double v : z) CHECK(v == 0.0);

  std::vector<double> empty;
  CHECK(dsp::preemphasize(empty, 0.97).empty());
}

TEST_CASE("preemphasis inverse round trips exactly at float64") {
  // With a coefficient whose products stay representable on the PCM16 grid
  // every step of filter and inverse is exact, so equality is bitwise.
  Rng rng(2);
  const double coeff = 0.96875;  // 31/32
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_pcm16_signal(2000, &rng);
    auto y = dsp::preemphasize(x, coeff);
    auto back = dsp::deemphasize(y, coeff);
    REQUIRE(back.size() == x.size());
    for (size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
  }
}

TEST_CASE("preemphasis inverse with the production coefficient is exact to ulp level") {
  // 0.97 is not representable, so each step rounds once; the round trip
  // error stays at the last bit of the samples.
  Rng rng(21);
  auto x = random_pcm16_signal(4000, &rng);
  auto y = dsp::preemphasize(x, 0.97);
  auto back = dsp::deemphasize(y, 0.97);
  double max_err = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    max_err = std::max(max_err, std::fabs(back[i] - x[i]));
  CHECK(max_err < 1e-14);
}

TEST_CASE("preemphasis inverse round trips within 1e-4 at float32") {
  Rng rng(3);
  std::vector<float> x(2000);
  for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  auto y = dsp::preemphasize(x, 0.97f);
  auto back = dsp::deemphasize(y, 0.97f);
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(std::fabs(back[i] - x[i]) < 1e-4f);
}

TEST_CASE("stft frame count and shape") {
  DspConfig cfg;
  auto wave = sine_wave(440.0, 1.0, cfg.sample_rate);
  REQUIRE(wave.size() == 16000);
  auto spec = dsp::stft_log_linear(wave, cfg);
  CHECK(spec.rows() == 81);  // 1 + 16000/200
  CHECK(spec.cols() == 1025);
}

TEST_CASE("dc signal concentrates in bin zero") {
  DspConfig cfg;
  std::vector<float> wave(8000, 0.5f);
  auto spec = dsp::stft_log_linear(wave, cfg);
  for (int m = 0; m < spec.rows(); ++m) {
    int argmax = 0;
    for (int b = 1; b < spec.cols(); ++b)
      if (spec.at(m, b) > spec.at(m, argmax)) argmax = b;
    CHECK(argmax == 0);
  }
}

TEST_CASE("1 kHz sine peaks at bin 128") {
  DspConfig cfg;
  auto wave = sine_wave(1000.0, 0.5, cfg.sample_rate);
  auto spec = dsp::stft_log_linear(wave, cfg);
  // 1000 * 2048 / 16000 = 128
  for (int m = 2; m < spec.rows() - 2; ++m) {  // skip edge frames
    int argmax = 0;
    for (int b = 1; b < spec.cols(); ++b)
      if (spec.at(m, b) > spec.at(m, argmax)) argmax = b;
    CHECK(argmax == 128);
  }
}

TEST_CASE("doubling the hop roughly halves the frame count") {
  DspConfig cfg;
  auto wave = sine_wave(500.0, 0.7, cfg.sample_rate);
  auto a = dsp::stft_log_linear(wave, cfg);
  DspConfig cfg2 = cfg;
  cfg2.hop_length *= 2;
  auto b = dsp::stft_log_linear(wave, cfg2);
  CHECK(std::abs(b.rows() - (a.rows() + 1) / 2) <= 1);
}

TEST_CASE("stft is deterministic") {
  DspConfig cfg;
  auto wave = sine_wave(740.0, 0.3, cfg.sample_rate);
  auto a = dsp::stft_log_linear(wave, cfg);
  auto b = dsp::stft_log_linear(wave, cfg);
  CHECK(a.value() == b.value());
}

TEST_CASE("mel filterbank shape and structure") {
  DspConfig cfg;
  auto fb = dsp::mel_filterbank(cfg);
  CHECK(fb.rows() == 80);
  CHECK(fb.cols() == 1025);

  int prev_peak = -1;
  for (int m = 0; m < fb.rows(); ++m) {
    double row_sum = 0.0;
    int peak = 0;
    for (int b = 0; b < fb.cols(); ++b) {
      const float w = fb.at(m, b);
      CHECK(w >= 0.0f);
      row_sum += w;
      if (w > fb.at(m, peak)) peak = b;
    }
    CHECK(row_sum > 0.0);
    CHECK(peak > prev_peak);
    prev_peak = peak;
  }
}

TEST_CASE("mel filterbank is a pure function of the config") {
  DspConfig cfg;
  auto a = dsp::mel_filterbank(cfg);
  auto b = dsp::mel_filterbank(cfg);
  CHECK(a.value() == b.value());
}

TEST_CASE("too many mel filters for the resolution is an error") {
  DspConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 64;
  cfg.n_mels = 120;
  CHECK_THROWS(dsp::mel_filterbank(cfg));
}

TEST_CASE("log mel shapes and floor behavior") {
  DspConfig cfg;
  auto fb = dsp::mel_filterbank(cfg);

  // zero-magnitude input -> every entry log(log_floor)
  const int frames = 3;
  auto zero_mag = ag::Tensor<float>::zeros(frames, cfg.bins());
  auto mel0 = dsp::log_mel_from_linear(zero_mag, fb, cfg);
  CHECK(mel0.rows() == frames);
  CHECK(mel0.cols() == 80);
  for (float v : mel0.value())
    CHECK(v == doctest::Approx(std::log(cfg.log_floor)).epsilon(1e-3));

  auto wave = sine_wave(800.0, 1.0, cfg.sample_rate);
  auto lin = dsp::stft_log_linear(wave, cfg);
  auto mel = dsp::log_mel_from_log_linear(lin, fb, cfg);
  CHECK(mel.rows() == 81);
  CHECK(mel.cols() == 80);
}

TEST_CASE("single hot bin lights only filters covering it") {
  DspConfig cfg;
  auto fb = dsp::mel_filterbank(cfg);
  const int hot_bin = 300;
  std::vector<float> mag(static_cast<size_t>(1) * cfg.bins(), 0.0f);
  mag[hot_bin] = 1.0f;
  auto mel = dsp::log_mel_from_linear(
      ag::Tensor<float>::from(std::move(mag), 1, cfg.bins()), fb, cfg);
  const float base = static_cast<float>(std::log(cfg.log_floor));
  for (int m = 0; m < 80; ++m) {
    const bool covered = fb.at(m, hot_bin) > 0.0f;
    if (covered)
      CHECK(mel.at(0, m) > base + 1e-4f);
    else
      CHECK(mel.at(0, m) == doctest::Approx(base).epsilon(1e-3));
  }
}

TEST_CASE("istft inverts stft away from the edges") {
  DspConfig cfg;
  auto wave = sine_wave(620.0, 0.5, cfg.sample_rate);
  std::vector<double> w(wave.begin(), wave.end());
  auto spec = dsp::stft_complex(w, cfg);
  auto back = dsp::istft(spec, cfg);
  REQUIRE(back.size() == (spec.size() - 1) * cfg.hop_length);
  double max_err = 0.0;
  for (size_t i = cfg.win_length; i + cfg.win_length < back.size(); ++i)
    max_err = std::max(max_err, std::fabs(back[i] - w[i]));
  CHECK(max_err < 1e-8);
}

TEST_CASE("griffin lim reconstructs a sine to low spectral error") {
  DspConfig cfg;
  auto wave = sine_wave(1000.0, 0.5, cfg.sample_rate);
  auto target = dsp::stft_log_linear(wave, cfg);
  std::vector<double> trace;
  auto rec = dsp::griffin_lim(target, cfg, 60, &trace);
  REQUIRE(trace.size() == 60);
  CHECK(trace.back() < 0.1);
  // monotone non-increasing within numerical tolerance
  for (size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] <= trace[i - 1] + 1e-6);
  CHECK(rec.size() == (static_cast<size_t>(target.rows()) - 1) * cfg.hop_length);
}

TEST_CASE("griffin lim of an all-floor spectrogram is near silence") {
  DspConfig cfg;
  auto flat = ag::Tensor<float>::filled(
      20, cfg.bins(), static_cast<float>(std::log(cfg.log_floor)));
  auto rec = dsp::griffin_lim(flat, cfg, 5);
  double peak = 0.0;
  for (float v : rec) peak = std::max(peak, static_cast<double>(std::fabs(v)));
  CHECK(peak < 1e-3);
}

TEST_CASE("griffin lim is deterministic") {
  DspConfig cfg;
  auto wave = sine_wave(500.0, 0.3, cfg.sample_rate);
  auto target = dsp::stft_log_linear(wave, cfg);
  auto a = dsp::griffin_lim(target, cfg, 10);
  auto b = dsp::griffin_lim(target, cfg, 10);
  CHECK(a == b);
}

TEST_CASE("wav round trip preserves pcm16 samples exactly") {
  Rng rng(9);
  std::vector<float> samples(4321);
  for (auto& s : samples)
    s = static_cast<float>(rng.randint(65536) - 32768) / 32768.0f;
  const std::string path = "test_roundtrip.wav";
  dsp::write_wav(path, samples, 16000);
  auto wav = dsp::read_wav(path);
  CHECK(wav.sample_rate == 16000);
  REQUIRE(wav.samples.size() == samples.size());
  size_t mismatches = 0;
  for (size_t i = 0; i < samples.size(); ++i)
    if (std::fabs(wav.samples[i] - samples[i]) > 1.0f / 32768.0f) ++mismatches;
  CHECK(mismatches == 0);
  std::remove(path.c_str());
}
