// models/tts.h
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

#ifndef SPEECHCHAIN_MODELS_TTS_H_
#define SPEECHCHAIN_MODELS_TTS_H_

// Sequence-to-sequence spectrogram synthesizer with one-shot speaker
// conditioning. Text runs through an embedding, a two-layer LReLU prenet and
// a CBHG block; an autoregressive decoder with content-based attention emits
// four mel frames per step, conditioned on a projected speaker embedding
// summed into the prenet output and concatenated ahead of the output
// projection; a second CBHG maps the predicted mel sequence to a linear
// spectrogram, and a stop head reads each predicted frame plus the context.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/nn.h"
#include "core/rng.h"
#include "core/tensor.h"
#include "models/asr.h"  // AttentionStep
#include "models/speaker_encoder.h"

namespace speechchain {

struct CbhgConfig {
  int in_dim = 128;
  int bank_k = 8;
  int bank_channels = 128;
  int proj_channels = 128;  // first projection conv
  int highway_dim = 128;
  int highway_layers = 4;
  int gru_hidden = 128;  // per direction

  int out_dim() const { return 2 * gru_hidden; }
};

// Convolution bank (widths 1..K) + max-pool + projections with a residual
// connection + highway stack + bidirectional GRU. Length preserving.
template <typename T>
struct Cbhg {
  CbhgConfig cfg;
  std::vector<nn::Conv1d<T>> bank;
  nn::Conv1d<T> proj1;
  nn::Conv1d<T> proj2;
  nn::Linear<T> pre_highway;  // only when in_dim != highway_dim
  std::vector<nn::Highway<T>> highways;
  nn::GruCell<T> gru_fwd, gru_bwd;

  Cbhg() = default;
  Cbhg(const CbhgConfig& config, Rng* rng) : cfg(config) {
    for (int k = 1; k <= cfg.bank_k; ++k)
      bank.emplace_back(cfg.in_dim, cfg.bank_channels, k, 1, rng);
    proj1 = nn::Conv1d<T>(cfg.bank_k * cfg.bank_channels, cfg.proj_channels,
                          3, 1, rng);
    proj2 = nn::Conv1d<T>(cfg.proj_channels, cfg.in_dim, 3, 1, rng);
    if (cfg.in_dim != cfg.highway_dim)
      pre_highway = nn::Linear<T>(cfg.in_dim, cfg.highway_dim, rng, false);
    for (int l = 0; l < cfg.highway_layers; ++l)
      highways.emplace_back(cfg.highway_dim, rng);
    gru_fwd = nn::GruCell<T>(cfg.highway_dim, cfg.gru_hidden, rng);
    gru_bwd = nn::GruCell<T>(cfg.highway_dim, cfg.gru_hidden, rng);
  }

  ag::Tensor<T> forward(const ag::Tensor<T>& x) const {
    std::vector<ag::Tensor<T>> bank_outs;
    bank_outs.reserve(bank.size());
    for (const auto& conv : bank)
      bank_outs.push_back(ag::lrelu(conv.forward(x)));
    ag::Tensor<T> h = ag::maxpool_time(ag::concat_cols(bank_outs), 2);
    h = ag::lrelu(proj1.forward(h));
    h = proj2.forward(h);  // linear, then residual
    h = ag::add(h, x);
    if (pre_highway.w.defined()) h = pre_highway.forward(h);
    for (const auto& hw : highways) h = hw.forward(h);
    return nn::run_bigru(gru_fwd, gru_bwd, h);
  }

  void collect(const std::string& prefix, nn::ParamList<T>* out) {
    for (size_t k = 0; k < bank.size(); ++k)
      bank[k].collect(prefix + ".bank" + std::to_string(k + 1), out);
    proj1.collect(prefix + ".proj1", out);
    proj2.collect(prefix + ".proj2", out);
    if (pre_highway.w.defined()) pre_highway.collect(prefix + ".prehw", out);
    for (size_t l = 0; l < highways.size(); ++l)
      highways[l].collect(prefix + ".hw" + std::to_string(l), out);
    gru_fwd.collect(prefix + ".gru.fwd", out);
    gru_bwd.collect(prefix + ".gru.bwd", out);
  }
};

struct TtsConfig {
  int n_classes = 33;
  int sos_id = 31;
  int eos_id = 32;
  int embed_dim = 256;
  int enc_prenet1 = 256;
  int enc_prenet2 = 128;
  CbhgConfig enc_cbhg;  // in_dim = enc_prenet2
  int spk_dim = 64;
  int dec_prenet1 = 256;
  int dec_prenet2 = 128;
  int dec_hidden = 256;  // two LSTM layers
  int att_dim = 128;
  int n_mels = 80;
  int frames_per_step = 4;
  int spk_proj_out = 64;  // projection concatenated ahead of the output FCs
  int out_fc = 256;
  CbhgConfig post_cbhg;  // in_dim = n_mels
  int n_linear = 1025;

  TtsConfig() {
    enc_cbhg.in_dim = enc_prenet2;
    post_cbhg.in_dim = n_mels;
  }

  int enc_out_dim() const { return enc_cbhg.out_dim(); }
};

template <typename T>
struct TtsStepOutput {
  ag::Tensor<T> mel_frames;   // [frames_per_step x n_mels]
  ag::Tensor<T> stop_logits;  // [1 x frames_per_step]
  AttentionStep<T> attention;
};

template <typename T>
struct TtsModel {
  TtsConfig cfg;
  ag::Tensor<T> embedding;  // [n_classes x embed_dim]
  nn::Linear<T> enc_fc1, enc_fc2;
  Cbhg<T> enc_cbhg;
  nn::Linear<T> dec_fc1, dec_fc2;
  nn::Linear<T> spk_prenet_proj;  // spk_dim -> dec_prenet2, summed
  nn::Linear<T> spk_out_proj;     // spk_dim -> spk_proj_out, concatenated
  nn::LstmCell<T> dec_lstm1, dec_lstm2;
  nn::Linear<T> att_enc, att_dec;  // no bias
  ag::Tensor<T> att_v;
  nn::Linear<T> out_fc1, out_fc2;  // -> frames_per_step * n_mels
  nn::Linear<T> stop_fc;           // [n_mels + enc_out] -> 1
  Cbhg<T> post_cbhg;
  nn::Linear<T> post_linear;  // post out -> n_linear

  TtsModel() = default;
  TtsModel(const TtsConfig& config, Rng* rng) : cfg(config) {
    embedding =
        nn::init_uniform<T>(cfg.n_classes, cfg.embed_dim, cfg.embed_dim, rng);
    enc_fc1 = nn::Linear<T>(cfg.embed_dim, cfg.enc_prenet1, rng);
    enc_fc2 = nn::Linear<T>(cfg.enc_prenet1, cfg.enc_prenet2, rng);
    enc_cbhg = Cbhg<T>(cfg.enc_cbhg, rng);
    dec_fc1 = nn::Linear<T>(cfg.n_mels, cfg.dec_prenet1, rng);
    dec_fc2 = nn::Linear<T>(cfg.dec_prenet1, cfg.dec_prenet2, rng);
    spk_prenet_proj = nn::Linear<T>(cfg.spk_dim, cfg.dec_prenet2, rng);
    spk_out_proj = nn::Linear<T>(cfg.spk_dim, cfg.spk_proj_out, rng);
    dec_lstm1 = nn::LstmCell<T>(cfg.dec_prenet2 + cfg.enc_out_dim(),
                                cfg.dec_hidden, rng);
    dec_lstm2 = nn::LstmCell<T>(cfg.dec_hidden, cfg.dec_hidden, rng);
    att_enc = nn::Linear<T>(cfg.enc_out_dim(), cfg.att_dim, rng, false);
    att_dec = nn::Linear<T>(cfg.dec_hidden, cfg.att_dim, rng, false);
    att_v = nn::init_uniform<T>(cfg.att_dim, 1, cfg.att_dim, rng);
    out_fc1 = nn::Linear<T>(
        cfg.dec_hidden + cfg.enc_out_dim() + cfg.spk_proj_out, cfg.out_fc, rng);
    out_fc2 =
        nn::Linear<T>(cfg.out_fc, cfg.frames_per_step * cfg.n_mels, rng);
    stop_fc = nn::Linear<T>(cfg.n_mels + cfg.enc_out_dim(), 1, rng);
    post_cbhg = Cbhg<T>(cfg.post_cbhg, rng);
    post_linear = nn::Linear<T>(cfg.post_cbhg.out_dim(), cfg.n_linear, rng);
  }

  // Framed ids -> text states [len(ids) x enc_out_dim].
  ag::Tensor<T> encode_text(const std::vector<int>& ids) const {
    if (ids.empty()) throw std::invalid_argument("encode_text: empty input");
    for (int id : ids)
      if (id < 0 || id >= cfg.n_classes)
        throw std::out_of_range("encode_text: id outside the alphabet");
    ag::Tensor<T> h = ag::gather_rows(embedding, ids);
    h = ag::lrelu(enc_fc1.forward(h));
    h = ag::lrelu(enc_fc2.forward(h));
    return enc_cbhg.forward(h);
  }

  AttentionStep<T> attend_cached(const ag::Tensor<T>& enc_proj,
                                 const ag::Tensor<T>& enc_states,
                                 const ag::Tensor<T>& dec_state) const {
    ag::Tensor<T> scores = ag::matmul(
        ag::tanh(ag::add_rowwise(enc_proj, att_dec.forward(dec_state))),
        att_v);
    ag::Tensor<T> weights = ag::softmax_rows(ag::transpose(scores));
    return {weights, ag::matmul(weights, enc_states)};
  }

  struct DecoderState {
    typename nn::LstmCell<T>::State s1, s2;
    ag::Tensor<T> context;
  };

  DecoderState initial_decoder_state() const {
    return {dec_lstm1.initial_state(), dec_lstm2.initial_state(),
            ag::Tensor<T>::zeros(1, cfg.enc_out_dim())};
  }

  // One decoder step from the previous mel frame (teacher-forced or fed
  // back). `z` must be the unit-norm speaker embedding [1 x spk_dim].
  TtsStepOutput<T> decode_step(const ag::Tensor<T>& prev_frame,
                               const ag::Tensor<T>& z,
                               const ag::Tensor<T>& enc_proj,
                               const ag::Tensor<T>& enc_states,
                               DecoderState* state) const {
    ag::Tensor<T> pre = ag::lrelu(dec_fc2.forward(
        ag::lrelu(dec_fc1.forward(prev_frame))));
    pre = ag::add(pre, spk_prenet_proj.forward(z));
    state->s1 = dec_lstm1.step(ag::concat_cols<T>({pre, state->context}),
                               state->s1);
    state->s2 = dec_lstm2.step(state->s1.h, state->s2);
    const AttentionStep<T> att =
        attend_cached(enc_proj, enc_states, state->s2.h);
    state->context = att.context;
    ag::Tensor<T> feat = ag::concat_cols<T>(
        {state->s2.h, att.context, spk_out_proj.forward(z)});
    ag::Tensor<T> flat = out_fc2.forward(ag::lrelu(out_fc1.forward(feat)));
    std::vector<ag::Tensor<T>> frames, stops;
    frames.reserve(cfg.frames_per_step);
    stops.reserve(cfg.frames_per_step);
    for (int f = 0; f < cfg.frames_per_step; ++f) {
      ag::Tensor<T> frame = ag::slice_cols(flat, f * cfg.n_mels, cfg.n_mels);
      frames.push_back(frame);
      stops.push_back(
          stop_fc.forward(ag::concat_cols<T>({frame, att.context})));
    }
    return {ag::concat_rows(frames), ag::concat_cols(stops), att};
  }

  struct ForwardOutput {
    ag::Tensor<T> mel;          // [S x n_mels]
    ag::Tensor<T> linear;       // [S x n_linear]
    ag::Tensor<T> stop_logits;  // [1 x S]
  };

  // Teacher forcing: step s consumes the last ground-truth frame of group
  // s-1 (zero "go" frame for s = 0). target_mel frame count must be a
  // multiple of frames_per_step; z must be unit norm (renormalized with a
  // warning to stderr otherwise). `true_frames` (default: all) bounds the
  // frames the bidirectional post-net reads, so padding cannot leak into
  // valid linear predictions; linear rows past it are zero.
  ForwardOutput forward_teacher_forced(const std::vector<int>& ids,
                                       const ag::Tensor<T>& target_mel,
                                       const ag::Tensor<T>& z,
                                       int true_frames = -1) const {
    if (target_mel.rows() < 1)
      throw std::invalid_argument("forward_teacher_forced: zero-step input");
    if (target_mel.rows() % cfg.frames_per_step != 0)
      throw std::invalid_argument(
          "forward_teacher_forced: frame count must be a multiple of the "
          "reduction factor");
    if (true_frames < 0) true_frames = target_mel.rows();
    if (true_frames < 1 || true_frames > target_mel.rows())
      throw std::invalid_argument("forward_teacher_forced: bad true_frames");
    const ag::Tensor<T> zu = ensure_unit_norm(z);
    const ag::Tensor<T> enc = encode_text(ids);
    const ag::Tensor<T> enc_proj = att_enc.forward(enc);
    DecoderState state = initial_decoder_state();
    const int steps = target_mel.rows() / cfg.frames_per_step;
    std::vector<ag::Tensor<T>> mel_parts, stop_parts;
    mel_parts.reserve(steps);
    stop_parts.reserve(steps);
    for (int s = 0; s < steps; ++s) {
      ag::Tensor<T> prev =
          s == 0 ? ag::Tensor<T>::zeros(1, cfg.n_mels)
                 : ag::row(target_mel, s * cfg.frames_per_step - 1);
      TtsStepOutput<T> out = decode_step(prev, zu, enc_proj, enc, &state);
      mel_parts.push_back(out.mel_frames);
      stop_parts.push_back(out.stop_logits);
    }
    ag::Tensor<T> mel = ag::concat_rows(mel_parts);
    ag::Tensor<T> linear = linear_from_mel(ag::slice_rows(mel, 0, true_frames));
    if (true_frames < mel.rows())
      linear = ag::concat_rows<T>(
          {linear,
           ag::Tensor<T>::zeros(mel.rows() - true_frames, cfg.n_linear)});
    return {mel, linear, ag::concat_cols(stop_parts)};
  }

  // Autoregressive generation, feeding back the last predicted frame.
  // Stops after the first group whose stop probability crosses 0.5, or at
  // max_frames. Returns the generated frame count in `stop_position`.
  ForwardOutput generate(const std::vector<int>& ids, const ag::Tensor<T>& z,
                         int max_frames, int* stop_position = nullptr) const {
    if (max_frames < cfg.frames_per_step ||
        max_frames % cfg.frames_per_step != 0)
      throw std::invalid_argument(
          "generate: max_frames must be a positive multiple of the "
          "reduction factor");
    ag::NoGradGuard ng;
    const ag::Tensor<T> zu = ensure_unit_norm(z);
    const ag::Tensor<T> enc = encode_text(ids);
    const ag::Tensor<T> enc_proj = att_enc.forward(enc);
    DecoderState state = initial_decoder_state();
    std::vector<ag::Tensor<T>> mel_parts;
    ag::Tensor<T> prev = ag::Tensor<T>::zeros(1, cfg.n_mels);
    int frames = 0;
    bool stopped = false;
    while (frames < max_frames && !stopped) {
      TtsStepOutput<T> out = decode_step(prev, zu, enc_proj, enc, &state);
      mel_parts.push_back(out.mel_frames);
      frames += cfg.frames_per_step;
      for (int f = 0; f < cfg.frames_per_step; ++f)
        if (T(1) / (T(1) + std::exp(-out.stop_logits.at(0, f))) > T(0.5))
          stopped = true;
      prev = ag::row(out.mel_frames, cfg.frames_per_step - 1);
    }
    if (stop_position) *stop_position = frames;
    ag::Tensor<T> mel = ag::concat_rows(mel_parts);
    return {mel, linear_from_mel(mel), ag::Tensor<T>()};
  }

  ag::Tensor<T> linear_from_mel(const ag::Tensor<T>& mel) const {
    return post_linear.forward(post_cbhg.forward(mel));
  }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> out;
    out.push_back({"tts.enc.embedding", embedding});
    enc_fc1.collect("tts.enc.fc1", &out);
    enc_fc2.collect("tts.enc.fc2", &out);
    enc_cbhg.collect("tts.enc.cbhg", &out);
    dec_fc1.collect("tts.dec.fc1", &out);
    dec_fc2.collect("tts.dec.fc2", &out);
    spk_prenet_proj.collect("tts.spk.prenet_proj", &out);
    spk_out_proj.collect("tts.spk.out_proj", &out);
    dec_lstm1.collect("tts.dec.lstm1", &out);
    dec_lstm2.collect("tts.dec.lstm2", &out);
    att_enc.collect("tts.att.enc", &out);
    att_dec.collect("tts.att.dec", &out);
    out.push_back({"tts.att.v", att_v});
    out_fc1.collect("tts.dec.out_fc1", &out);
    out_fc2.collect("tts.dec.out_fc2", &out);
    stop_fc.collect("tts.stop", &out);
    post_cbhg.collect("tts.post.cbhg", &out);
    post_linear.collect("tts.post.linear", &out);
    return out;
  }

 private:
  static ag::Tensor<T> ensure_unit_norm(const ag::Tensor<T>& z) {
    double norm_sq = 0.0;
    for (T v : z.value()) norm_sq += static_cast<double>(v) * v;
    if (std::fabs(norm_sq - 1.0) <= 2e-5) return z;
    std::fprintf(stderr,
                 "warning: speaker embedding norm %.6f != 1, renormalizing\n",
                 std::sqrt(norm_sq));
    return ag::l2_normalize(z);
  }
};

// End-of-speech labels for a true frame count S padded to padded_frames:
// zeros before the final true frame, ones from it through the padding.
inline std::vector<float> build_stop_labels(int true_frames, int padded_frames) {
  if (true_frames < 1 || padded_frames < true_frames)
    throw std::invalid_argument("build_stop_labels: bad frame counts");
  std::vector<float> b(padded_frames, 0.0f);
  for (int s = true_frames - 1; s < padded_frames; ++s) b[s] = 1.0f;
  return b;
}

template <typename T>
struct TtsLossWeights {
  T gamma1 = T(1);
  T gamma2 = T(1);
  T gamma3 = T(0.25);
};

// gamma1 * (masked L2 on mel + masked L2 on linear)
// + gamma2 * BCE(stop labels, stop probabilities)   (padding frames included,
//   their labels are 1)
// + gamma3 * (1 - cos(z_hat, z)), z_hat re-embedded from the predicted mel
//   through the frozen speaker encoder; gradients flow back into the
//   synthesizer only.
template <typename T>
ag::Tensor<T> tts_loss(const typename TtsModel<T>::ForwardOutput& pred,
                       const ag::Tensor<T>& target_mel,
                       const ag::Tensor<T>& target_linear,
                       const std::vector<T>& stop_labels, int true_frames,
                       const ag::Tensor<T>& z, const SpeakerEncoder<T>& spkrec,
                       const TtsLossWeights<T>& w) {
  const int s = pred.mel.rows();
  if (target_mel.rows() != s || target_linear.rows() != s ||
      static_cast<int>(stop_labels.size()) != s || pred.stop_logits.cols() != s)
    throw std::invalid_argument("tts_loss: shape mismatch");
  if (true_frames < 1 || true_frames > s)
    throw std::invalid_argument("tts_loss: bad true frame count");

  std::vector<T> mask(s, T(0));
  for (int i = 0; i < true_frames; ++i) mask[i] = T(1);

  ag::Tensor<T> dm = ag::sub(pred.mel, target_mel);
  ag::Tensor<T> l2_mel = ag::sum(ag::scale_rows(ag::mul(dm, dm), mask));
  ag::Tensor<T> dl = ag::sub(pred.linear, target_linear);
  ag::Tensor<T> l2_lin = ag::sum(ag::scale_rows(ag::mul(dl, dl), mask));

  ag::Tensor<T> labels = ag::Tensor<T>::from(stop_labels, 1, s);
  ag::Tensor<T> probs = ag::sigmoid(pred.stop_logits);
  ag::Tensor<T> bce = ag::neg(ag::sum(ag::add(
      ag::mul(labels, ag::log(ag::clamp_min(probs, T(1e-7)))),
      ag::mul(ag::one_minus(labels),
              ag::log(ag::clamp_min(ag::one_minus(probs), T(1e-7)))))));

  ag::Tensor<T> z_hat =
      spkrec.embed(ag::slice_rows(pred.mel, 0, true_frames));
  ag::Tensor<T> style = ag::one_minus(ag::cosine_similarity(z_hat, z));

  return ag::add(ag::add(ag::scale(ag::add(l2_mel, l2_lin), w.gamma1),
                         ag::scale(bce, w.gamma2)),
                 ag::scale(style, w.gamma3));
}

}  // namespace speechchain

#endif  // SPEECHCHAIN_MODELS_TTS_H_
