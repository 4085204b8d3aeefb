// models/asr.h
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

#ifndef SPEECHCHAIN_MODELS_ASR_H_
#define SPEECHCHAIN_MODELS_ASR_H_

// Attention-based sequence-to-sequence speech recognizer. The encoder stacks
// bidirectional LSTM layers, halving the frame rate after each one (total
// subsampling factor 8); the decoder is a single LSTM over character
// embeddings with content-based attention and an output projection over the
// alphabet. Decoding is greedy or length-normalized beam search.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/nn.h"
#include "core/rng.h"
#include "core/tensor.h"

namespace speechchain {

struct AsrConfig {
  int n_mels = 80;
  int enc_hidden = 256;  // per direction
  int enc_layers = 3;    // each followed by keep-every-2nd-frame subsampling
  int dec_embed = 256;
  int dec_hidden = 512;
  int att_dim = 128;
  int n_classes = 33;
  int sos_id = 31;
  int eos_id = 32;

  int enc_out_dim() const { return 2 * enc_hidden; }
};

template <typename T>
struct AttentionStep {
  ag::Tensor<T> weights;  // [1 x S], nonnegative, sums to 1
  ag::Tensor<T> context;  // [1 x enc_out_dim]
};

template <typename T>
struct AsrModel {
  AsrConfig cfg;
  std::vector<nn::LstmCell<T>> enc_fwd;
  std::vector<nn::LstmCell<T>> enc_bwd;
  ag::Tensor<T> embedding;  // [n_classes x dec_embed]
  nn::LstmCell<T> dec_lstm;
  nn::Linear<T> att_enc;  // enc_out -> att_dim, no bias
  nn::Linear<T> att_dec;  // dec_hidden -> att_dim, no bias
  ag::Tensor<T> att_v;    // [att_dim x 1]
  nn::Linear<T> out_proj;  // [dec_hidden + enc_out] -> n_classes

  AsrModel() = default;
  AsrModel(const AsrConfig& config, Rng* rng) : cfg(config) {
    int in = cfg.n_mels;
    for (int l = 0; l < cfg.enc_layers; ++l) {
      enc_fwd.emplace_back(in, cfg.enc_hidden, rng);
      enc_bwd.emplace_back(in, cfg.enc_hidden, rng);
      in = cfg.enc_out_dim();
    }
    embedding = nn::init_uniform<T>(cfg.n_classes, cfg.dec_embed,
                                    cfg.dec_embed, rng);
    dec_lstm = nn::LstmCell<T>(cfg.dec_embed + cfg.enc_out_dim(),
                               cfg.dec_hidden, rng);
    att_enc = nn::Linear<T>(cfg.enc_out_dim(), cfg.att_dim, rng, false);
    att_dec = nn::Linear<T>(cfg.dec_hidden, cfg.att_dim, rng, false);
    att_v = nn::init_uniform<T>(cfg.att_dim, 1, cfg.att_dim, rng);
    out_proj = nn::Linear<T>(cfg.dec_hidden + cfg.enc_out_dim(),
                             cfg.n_classes, rng);
  }

  // [S x n_mels] -> [ceil(S/8) x enc_out_dim]
  ag::Tensor<T> encode(const ag::Tensor<T>& log_mel) const {
    if (log_mel.rows() < 1)
      throw std::invalid_argument("encode: empty input");
    if (log_mel.cols() != cfg.n_mels)
      throw std::invalid_argument("encode: wrong feature width");
    ag::Tensor<T> h = log_mel;
    for (int l = 0; l < cfg.enc_layers; ++l) {
      h = nn::run_bilstm(enc_fwd[l], enc_bwd[l], h);
      std::vector<int> keep;
      for (int i = 0; i < h.rows(); i += 2) keep.push_back(i);
      h = ag::gather_rows(h, keep);
    }
    return h;
  }

  // score(s) = v . tanh(W h_e[s] + V h_d); weights = softmax(scores);
  // context = sum_s weights[s] * h_e[s].
  AttentionStep<T> attend(const ag::Tensor<T>& enc_states,
                          const ag::Tensor<T>& dec_state) const {
    return attend_cached(att_enc.forward(enc_states), enc_states, dec_state);
  }

  AttentionStep<T> attend_cached(const ag::Tensor<T>& enc_proj,
                                 const ag::Tensor<T>& enc_states,
                                 const ag::Tensor<T>& dec_state) const {
    if (enc_states.rows() < 1)
      throw std::invalid_argument("attend: empty encoder states");
    ag::Tensor<T> scores = ag::matmul(
        ag::tanh(ag::add_rowwise(enc_proj, att_dec.forward(dec_state))),
        att_v);  // [S x 1]
    ag::Tensor<T> weights = ag::softmax_rows(ag::transpose(scores));
    return {weights, ag::matmul(weights, enc_states)};
  }

  // Teacher forcing over framed ids [sos, ..., eos]; returns per-step
  // probability rows [len(ids)-1 x n_classes] (no prediction for the
  // start tag).
  ag::Tensor<T> forward_teacher_forced(const ag::Tensor<T>& log_mel,
                                       const std::vector<int>& ids) const {
    check_ids(ids);
    const ag::Tensor<T> enc = encode(log_mel);
    const ag::Tensor<T> enc_proj = att_enc.forward(enc);
    typename nn::LstmCell<T>::State state = dec_lstm.initial_state();
    ag::Tensor<T> context = ag::Tensor<T>::zeros(1, cfg.enc_out_dim());
    std::vector<ag::Tensor<T>> rows;
    rows.reserve(ids.size() - 1);
    for (size_t t = 1; t < ids.size(); ++t) {
      const ag::Tensor<T> emb = ag::gather_rows(embedding, {ids[t - 1]});
      state = dec_lstm.step(ag::concat_cols<T>({emb, context}), state);
      const AttentionStep<T> att = attend_cached(enc_proj, enc, state.h);
      context = att.context;
      rows.push_back(ag::softmax_rows(
          out_proj.forward(ag::concat_cols<T>({state.h, context}))));
    }
    return ag::concat_rows(rows);
  }

  // -sum_t log(max(p[t, y_t], 1e-8)) over the framed targets.
  ag::Tensor<T> nll_loss(const ag::Tensor<T>& probs,
                         const std::vector<int>& ids) const {
    check_ids(ids);
    if (probs.rows() != static_cast<int>(ids.size()) - 1)
      throw std::invalid_argument("nll_loss: step count mismatch");
    std::vector<int> targets(ids.begin() + 1, ids.end());
    return ag::neg(ag::sum(
        ag::log(ag::clamp_min(ag::pick(probs, targets), T(1e-8)))));
  }

  std::vector<int> greedy_decode(const ag::Tensor<T>& log_mel,
                                 int max_len) const {
    return beam_decode(log_mel, 1, max_len);
  }

  // Standard beam search over characters; live hypotheses are pruned by
  // cumulative log-probability, finished ones are kept aside and compared
  // by (sum log-prob)/length at the end. The start tag is never emitted.
  // Returned ids exclude the framing tags.
  std::vector<int> beam_decode(const ag::Tensor<T>& log_mel, int beam,
                               int max_len) const {
    if (beam < 1) throw std::invalid_argument("beam_decode: beam >= 1");
    if (max_len < 1) throw std::invalid_argument("beam_decode: max_len >= 1");
    ag::NoGradGuard ng;

    struct Hyp {
      std::vector<int> emitted;  // excludes sos/eos
      double logp = 0.0;
      typename nn::LstmCell<T>::State state;
      ag::Tensor<T> context;
    };

    const ag::Tensor<T> enc = encode(log_mel);
    const ag::Tensor<T> enc_proj = att_enc.forward(enc);

    Hyp root;
    root.state = dec_lstm.initial_state();
    root.context = ag::Tensor<T>::zeros(1, cfg.enc_out_dim());
    std::vector<Hyp> live{root};

    bool have_best = false;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<int> best_ids;
    auto offer_finished = [&](const std::vector<int>& ids, double logp,
                              int emitted_len) {
      const double score = logp / static_cast<double>(emitted_len);
      if (!have_best || score > best_score) {
        have_best = true;
        best_score = score;
        best_ids = ids;
      }
    };

    for (int step = 0; step < max_len && !live.empty(); ++step) {
      struct Cand {
        size_t parent;
        int id;
        double logp;
      };
      std::vector<Cand> cands;
      std::vector<typename nn::LstmCell<T>::State> states(live.size());
      std::vector<ag::Tensor<T>> contexts(live.size());
      for (size_t h = 0; h < live.size(); ++h) {
        const int prev =
            live[h].emitted.empty() ? cfg.sos_id : live[h].emitted.back();
        const ag::Tensor<T> emb = ag::gather_rows(embedding, {prev});
        states[h] = dec_lstm.step(
            ag::concat_cols<T>({emb, live[h].context}), live[h].state);
        const AttentionStep<T> att =
            attend_cached(enc_proj, enc, states[h].h);
        contexts[h] = att.context;
        ag::Tensor<T> logits = out_proj.forward(
            ag::concat_cols<T>({states[h].h, contexts[h]}));
        // never emit the start tag
        std::vector<T> masked = logits.value();
        masked[cfg.sos_id] = -std::numeric_limits<T>::infinity();
        const ag::Tensor<T> p = ag::softmax_rows(
            ag::Tensor<T>::from(std::move(masked), 1, cfg.n_classes));
        for (int c = 0; c < cfg.n_classes; ++c) {
          if (c == cfg.sos_id) continue;
          const double lp =
              std::log(std::max(static_cast<double>(p.at(0, c)), 1e-300));
          cands.push_back({h, c, live[h].logp + lp});
        }
      }
      std::stable_sort(cands.begin(), cands.end(),
                       [](const Cand& a, const Cand& b) { return a.logp > b.logp; });
      // The top `beam` expansions fill the next beam; an end-tag expansion
      // consumes its slot as a finished hypothesis (so beam 1 is greedy).
      std::vector<Hyp> next;
      int slots = 0;
      for (const Cand& cand : cands) {
        if (slots >= beam) break;
        ++slots;
        if (cand.id == cfg.eos_id) {
          offer_finished(live[cand.parent].emitted, cand.logp,
                         static_cast<int>(live[cand.parent].emitted.size()) + 1);
          continue;
        }
        Hyp h;
        h.emitted = live[cand.parent].emitted;
        h.emitted.push_back(cand.id);
        h.logp = cand.logp;
        h.state = states[cand.parent];
        h.context = contexts[cand.parent];
        next.push_back(std::move(h));
      }
      live.swap(next);
    }
    // hypotheses cut off at max_len compete by the same normalized score
    for (const Hyp& h : live)
      if (!h.emitted.empty())
        offer_finished(h.emitted, h.logp, static_cast<int>(h.emitted.size()));
    return best_ids;
  }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> out;
    for (size_t l = 0; l < enc_fwd.size(); ++l) {
      enc_fwd[l].collect("asr.enc.l" + std::to_string(l) + ".fwd", &out);
      enc_bwd[l].collect("asr.enc.l" + std::to_string(l) + ".bwd", &out);
    }
    out.push_back({"asr.dec.embedding", embedding});
    dec_lstm.collect("asr.dec.lstm", &out);
    att_enc.collect("asr.att.enc", &out);
    att_dec.collect("asr.att.dec", &out);
    out.push_back({"asr.att.v", att_v});
    out_proj.collect("asr.dec.out", &out);
    return out;
  }

 private:
  void check_ids(const std::vector<int>& ids) const {
    if (ids.size() < 2)
      throw std::invalid_argument("ids must be framed with start/end tags");
    for (int id : ids)
      if (id < 0 || id >= cfg.n_classes)
        throw std::out_of_range("id outside the alphabet");
  }
};

}  // namespace speechchain

#endif  // SPEECHCHAIN_MODELS_ASR_H_
