// dsp/dsp.cc
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

#include "dsp/dsp.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace speechchain {
namespace dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT; inverse=true applies 1/N scaling.
void fft_inplace(std::vector<std::complex<double>>* buf, bool inverse) {
  auto& a = *buf;
  const size_t n = a.size();
  if (!is_power_of_two(static_cast<int>(n)))
    throw std::invalid_argument("fft size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

// Periodic Hann window of length n.
std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / static_cast<double>(n));
  return w;
}

// Reflective index into [0, len): ... 2 1 | 0 1 2 ... len-1 | len-2 ...
size_t reflect_index(long long i, size_t len) {
  if (len == 1) return 0;
  const long long period = 2 * (static_cast<long long>(len) - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(len)) m = period - m;
  return static_cast<size_t>(m);
}

}  // namespace

namespace {

// Analysis over an already-padded signal: frame m windows
// padded[m*hop .. m*hop + n_fft). Exact adjoint geometry of wola_synthesis,
// which makes the Griffin-Lim projection a true least-squares projection.
std::vector<std::vector<std::complex<double>>> analyze_padded(
    const std::vector<double>& padded, const DspConfig& cfg, int frames) {
  const std::vector<double> window = hann_window(cfg.win_length);
  const int win_off = (cfg.n_fft - cfg.win_length) / 2;
  std::vector<std::vector<std::complex<double>>> out(frames);
  std::vector<std::complex<double>> buf(cfg.n_fft);
  for (int m = 0; m < frames; ++m) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    const size_t start = static_cast<size_t>(m) * cfg.hop_length;
    for (int i = 0; i < cfg.win_length; ++i)
      buf[win_off + i] = window[i] * padded[start + win_off + i];
    fft_inplace(&buf, false);
    out[m].assign(buf.begin(), buf.begin() + cfg.bins());
  }
  return out;
}

// Least-squares weighted overlap-add inverse of analyze_padded; returns the
// full padded-length signal.
std::vector<double> wola_synthesis(
    const std::vector<std::vector<std::complex<double>>>& frames,
    const DspConfig& cfg) {
  const int n_frames = static_cast<int>(frames.size());
  const size_t padded_len =
      static_cast<size_t>(n_frames - 1) * cfg.hop_length + cfg.n_fft;
  const std::vector<double> window = hann_window(cfg.win_length);
  const int win_off = (cfg.n_fft - cfg.win_length) / 2;

  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> wsum(padded_len, 0.0);
  std::vector<std::complex<double>> buf(cfg.n_fft);
  for (int m = 0; m < n_frames; ++m) {
    if (static_cast<int>(frames[m].size()) != cfg.bins())
      throw std::invalid_argument("istft: wrong bin count");
    for (int k = 0; k < cfg.bins(); ++k) buf[k] = frames[m][k];
    for (int k = cfg.bins(); k < cfg.n_fft; ++k)
      buf[k] = std::conj(frames[m][cfg.n_fft - k]);
    fft_inplace(&buf, true);
    const size_t base = static_cast<size_t>(m) * cfg.hop_length;
    for (int i = 0; i < cfg.win_length; ++i) {
      const size_t dst = base + win_off + i;
      acc[dst] += window[i] * buf[win_off + i].real();
      wsum[dst] += window[i] * window[i];
    }
  }
  for (size_t i = 0; i < padded_len; ++i)
    acc[i] = wsum[i] > 1e-10 ? acc[i] / wsum[i] : 0.0;
  return acc;
}

}  // namespace

void DspConfig::validate() const {
  if (!(hop_length <= win_length && win_length <= n_fft))
    throw std::invalid_argument("require hop <= win <= n_fft");
  if (!(n_mels < bins()))
    throw std::invalid_argument("require n_mels < n_fft/2 + 1");
  if (!is_power_of_two(n_fft))
    throw std::invalid_argument("n_fft must be a power of two");
  if (hop_length <= 0 || sample_rate <= 0)
    throw std::invalid_argument("invalid dsp config");
  if (!(preemphasis >= 0.0 && preemphasis < 1.0))
    throw std::invalid_argument("preemphasis must be in [0, 1)");
}

template <typename T>
std::vector<T> preemphasize(const std::vector<T>& wave, T coeff) {
  std::vector<T> out(wave.size());
  if (wave.empty()) return out;
  out[0] = wave[0];
  for (size_t t = 1; t < wave.size(); ++t)
    out[t] = wave[t] - coeff * wave[t - 1];
  return out;
}

template <typename T>
std::vector<T> deemphasize(const std::vector<T>& wave, T coeff) {
  std::vector<T> out(wave.size());
  if (wave.empty()) return out;
  out[0] = wave[0];
  for (size_t t = 1; t < wave.size(); ++t)
    out[t] = wave[t] + coeff * out[t - 1];
  return out;
}

template std::vector<float> preemphasize<float>(const std::vector<float>&, float);
template std::vector<double> preemphasize<double>(const std::vector<double>&, double);
template std::vector<float> deemphasize<float>(const std::vector<float>&, float);
template std::vector<double> deemphasize<double>(const std::vector<double>&, double);

std::vector<std::vector<std::complex<double>>> stft_complex(
    const std::vector<double>& wave, const DspConfig& cfg) {
  cfg.validate();
  if (wave.empty()) throw std::invalid_argument("stft of an empty signal");
  const int pad = cfg.n_fft / 2;
  const int frames = 1 + static_cast<int>(wave.size()) / cfg.hop_length;
  const size_t padded_len =
      static_cast<size_t>(frames - 1) * cfg.hop_length + cfg.n_fft;
  std::vector<double> padded(padded_len);
  for (size_t i = 0; i < padded_len; ++i)
    padded[i] = wave[reflect_index(static_cast<long long>(i) - pad, wave.size())];
  return analyze_padded(padded, cfg, frames);
}

std::vector<double> istft(
    const std::vector<std::vector<std::complex<double>>>& frames,
    const DspConfig& cfg) {
  cfg.validate();
  if (frames.empty()) return {};
  const int pad = cfg.n_fft / 2;
  const std::vector<double> full = wola_synthesis(frames, cfg);
  const size_t out_len = (frames.size() - 1) * cfg.hop_length;
  return std::vector<double>(full.begin() + pad, full.begin() + pad + out_len);
}

ag::Tensor<float> stft_log_linear(const std::vector<float>& wave,
                                  const DspConfig& cfg) {
  std::vector<double> w(wave.begin(), wave.end());
  const auto spec = stft_complex(w, cfg);
  const int frames = static_cast<int>(spec.size());
  const int bins = cfg.bins();
  std::vector<float> out(static_cast<size_t>(frames) * bins);
  for (int m = 0; m < frames; ++m)
    for (int k = 0; k < bins; ++k)
      out[static_cast<size_t>(m) * bins + k] = static_cast<float>(
          std::log(std::max(std::abs(spec[m][k]), cfg.log_floor)));
  return ag::Tensor<float>::from(std::move(out), frames, bins);
}

ag::Tensor<float> mel_filterbank(const DspConfig& cfg) {
  cfg.validate();
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) {
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  const double mel_hi = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> centers(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    centers[i] = mel_to_hz(mel_hi * i / static_cast<double>(cfg.n_mels + 1));

  const int bins = cfg.bins();
  std::vector<float> fb(static_cast<size_t>(cfg.n_mels) * bins, 0.0f);
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.n_fft;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    bool nonzero = false;
    for (int b = 0; b < bins; ++b) {
      const double f = b * bin_hz;
      double w = 0.0;
      if (f > lo && f < hi)
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      if (w > 0.0) nonzero = true;
      fb[static_cast<size_t>(m) * bins + b] = static_cast<float>(w);
    }
    if (!nonzero)
      throw std::invalid_argument(
          "mel filter " + std::to_string(m) +
          " has empty support; n_mels too large for this FFT resolution");
  }
  return ag::Tensor<float>::from(std::move(fb), cfg.n_mels, bins);
}

ag::Tensor<float> log_mel_from_linear(const ag::Tensor<float>& magnitudes,
                                      const ag::Tensor<float>& filterbank,
                                      const DspConfig& cfg) {
  const int frames = magnitudes.rows();
  const int bins = cfg.bins();
  if (magnitudes.cols() != bins || filterbank.cols() != bins ||
      filterbank.rows() != cfg.n_mels)
    throw std::invalid_argument("log_mel: frame/bin dimension mismatch");
  std::vector<float> out(static_cast<size_t>(frames) * cfg.n_mels);
  for (int m = 0; m < frames; ++m) {
    const float* mag = magnitudes.data() + static_cast<size_t>(m) * bins;
    for (int i = 0; i < cfg.n_mels; ++i) {
      double acc = 0.0;
      const float* w = filterbank.data() + static_cast<size_t>(i) * bins;
      for (int b = 0; b < bins; ++b) acc += static_cast<double>(w[b]) * mag[b];
      out[static_cast<size_t>(m) * cfg.n_mels + i] =
          static_cast<float>(std::log(std::max(acc, cfg.log_floor)));
    }
  }
  return ag::Tensor<float>::from(std::move(out), frames, cfg.n_mels);
}

ag::Tensor<float> log_mel_from_log_linear(const ag::Tensor<float>& log_linear,
                                          const ag::Tensor<float>& filterbank,
                                          const DspConfig& cfg) {
  std::vector<float> mag(log_linear.numel());
  for (size_t i = 0; i < mag.size(); ++i)
    mag[i] = std::exp(log_linear.value()[i]);
  return log_mel_from_linear(
      ag::Tensor<float>::from(std::move(mag), log_linear.rows(),
                              log_linear.cols()),
      filterbank, cfg);
}

FeatureSet extract_features(const std::vector<float>& wave, const DspConfig& cfg,
                            const ag::Tensor<float>& filterbank) {
  const std::vector<float> emphasized =
      preemphasize(wave, static_cast<float>(cfg.preemphasis));
  FeatureSet fs;
  fs.log_linear = stft_log_linear(emphasized, cfg);
  fs.log_mel = log_mel_from_log_linear(fs.log_linear, filterbank, cfg);
  fs.frames = fs.log_linear.rows();
  return fs;
}

std::vector<float> griffin_lim(const ag::Tensor<float>& log_linear,
                               const DspConfig& cfg, int iterations,
                               std::vector<double>* convergence_trace) {
  cfg.validate();
  if (iterations < 1) throw std::invalid_argument("griffin_lim: iterations >= 1");
  const int frames = log_linear.rows();
  const int bins = cfg.bins();
  if (log_linear.cols() != bins)
    throw std::invalid_argument("griffin_lim: wrong bin count");

  std::vector<std::vector<double>> target(frames, std::vector<double>(bins));
  double target_norm_sq = 0.0;
  for (int m = 0; m < frames; ++m)
    for (int k = 0; k < bins; ++k) {
      target[m][k] = std::exp(static_cast<double>(log_linear.at(m, k)));
      target_norm_sq += target[m][k] * target[m][k];
    }
  const double target_norm = std::sqrt(std::max(target_norm_sq, 1e-300));

  // Alternating projections between the magnitude set and the consistent
  // set over the full padded extent, with momentum extrapolation between
  // consistent iterates. The synthesis is the least-squares inverse of the
  // analysis, so the plain projection step never increases the spectral
  // distance; an extrapolated step is kept only when it does not either,
  // which preserves the monotone guarantee. Zero initial phase keeps the
  // whole procedure deterministic.
  using Spec = std::vector<std::vector<std::complex<double>>>;
  const double momentum = 0.95;

  auto mag_replace = [&](const Spec& s) {
    Spec out(frames, std::vector<std::complex<double>>(bins));
    for (int m = 0; m < frames; ++m)
      for (int k = 0; k < bins; ++k) {
        const double mag = std::abs(s[m][k]);
        out[m][k] = mag > 1e-12 ? s[m][k] * (target[m][k] / mag)
                                : std::complex<double>(target[m][k], 0.0);
      }
    return out;
  };
  auto project_consistent = [&](const Spec& s) {
    return analyze_padded(wola_synthesis(s, cfg), cfg, frames);
  };
  auto distance = [&](const Spec& s) {
    double err_sq = 0.0;
    for (int m = 0; m < frames; ++m)
      for (int k = 0; k < bins; ++k) {
        const double d = std::abs(s[m][k]) - target[m][k];
        err_sq += d * d;
      }
    return std::sqrt(err_sq) / target_norm;
  };

  Spec init(frames, std::vector<std::complex<double>>(bins));
  for (int m = 0; m < frames; ++m)
    for (int k = 0; k < bins; ++k) init[m][k] = target[m][k];
  Spec proj = project_consistent(init);
  Spec proj_prev = proj;
  double best = distance(proj);

  for (int it = 0; it < iterations; ++it) {
    Spec extrap(frames, std::vector<std::complex<double>>(bins));
    for (int m = 0; m < frames; ++m)
      for (int k = 0; k < bins; ++k)
        extrap[m][k] =
            proj[m][k] + momentum * (proj[m][k] - proj_prev[m][k]);
    Spec cand = project_consistent(mag_replace(extrap));
    double cand_dist = distance(cand);
    if (cand_dist > best) {
      cand = project_consistent(mag_replace(proj));
      cand_dist = distance(cand);
    }
    proj_prev.swap(proj);
    proj.swap(cand);
    best = std::min(best, cand_dist);
    if (convergence_trace) convergence_trace->push_back(cand_dist);
  }
  const std::vector<double> final_padded =
      wola_synthesis(mag_replace(proj), cfg);
  const int pad = cfg.n_fft / 2;
  const size_t out_len = static_cast<size_t>(frames - 1) * cfg.hop_length;
  return std::vector<float>(final_padded.begin() + pad,
                            final_padded.begin() + pad + out_len);
}

}  // namespace dsp
}  // namespace speechchain
