// dsp/dsp.h
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

#ifndef SPEECHCHAIN_DSP_DSP_H_
#define SPEECHCHAIN_DSP_DSP_H_

// Deterministic signal pipeline: pre-emphasis, STFT, log-linear and log-mel
// spectrograms, and Griffin-Lim phase recovery. Everything here is a pure
// function of its inputs; internals run at double precision, feature
// matrices are emitted as float32.

#include <complex>
#include <vector>

#include "core/tensor.h"

namespace speechchain {
namespace dsp {

struct DspConfig {
  int sample_rate = 16000;
  double preemphasis = 0.97;   // y[t] = x[t] - coeff * x[t-1]
  int win_length = 800;        // 50 ms
  int hop_length = 200;        // 12.5 ms
  int n_fft = 2048;
  int n_mels = 80;
  double log_floor = 1e-5;

  int bins() const { return n_fft / 2 + 1; }
  void validate() const;
};

// Per-utterance features: log-mel [frames x n_mels] and log-linear
// [frames x bins], sharing a frame count.
struct FeatureSet {
  ag::Tensor<float> log_mel;
  ag::Tensor<float> log_linear;
  int frames = 0;
};

template <typename T>
std::vector<T> preemphasize(const std::vector<T>& wave, T coeff);

// Exact inverse recursion: x[t] = y[t] + coeff * x[t-1].
template <typename T>
std::vector<T> deemphasize(const std::vector<T>& wave, T coeff);

// Complex STFT with reflective center padding; frames = 1 + len/hop.
// Each column k holds bin k in [0, n_fft/2].
std::vector<std::vector<std::complex<double>>> stft_complex(
    const std::vector<double>& wave, const DspConfig& cfg);

// Weighted overlap-add inverse of stft_complex; output length is
// (frames - 1) * hop (center padding removed).
std::vector<double> istft(
    const std::vector<std::vector<std::complex<double>>>& frames,
    const DspConfig& cfg);

// log(max(|STFT|, log_floor)) as [frames x bins].
ag::Tensor<float> stft_log_linear(const std::vector<float>& wave,
                                  const DspConfig& cfg);

// Triangular mel filters [n_mels x bins] on mel = 2595*log10(1 + f/700).
// Throws if any filter would have empty support at this FFT resolution.
ag::Tensor<float> mel_filterbank(const DspConfig& cfg);

// log(max(filterbank * magnitudes^T, log_floor))^T as [frames x n_mels].
ag::Tensor<float> log_mel_from_linear(const ag::Tensor<float>& magnitudes,
                                      const ag::Tensor<float>& filterbank,
                                      const DspConfig& cfg);

// Same, recovering linear magnitudes from a log-linear spectrogram first.
ag::Tensor<float> log_mel_from_log_linear(const ag::Tensor<float>& log_linear,
                                          const ag::Tensor<float>& filterbank,
                                          const DspConfig& cfg);

// Full pipeline for one utterance: pre-emphasis, shared STFT, both features.
FeatureSet extract_features(const std::vector<float>& wave, const DspConfig& cfg,
                            const ag::Tensor<float>& filterbank);

// Iterative phase reconstruction from a log-linear magnitude spectrogram,
// zero initial phase. If `convergence_trace` is non-null it receives
// || |STFT(x_i)| - M ||_F / ||M||_F per iteration.
std::vector<float> griffin_lim(const ag::Tensor<float>& log_linear,
                               const DspConfig& cfg, int iterations,
                               std::vector<double>* convergence_trace = nullptr);

}  // namespace dsp
}  // namespace speechchain

#endif  // SPEECHCHAIN_DSP_DSP_H_
