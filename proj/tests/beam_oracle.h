// tests/beam_oracle.h
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

#ifndef SPEECHCHAIN_TESTS_BEAM_ORACLE_H_
#define SPEECHCHAIN_TESTS_BEAM_ORACLE_H_

// Exhaustive decoding oracle: enumerates every emission sequence up to
// max_len (terminated by the end tag or cut off at max_len), scores each by
// running plain decoder steps, and returns the best sequence under the
// length-normalized score. Independent of the beam search's pruning and
// bookkeeping, which is what it is used to check.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "models/asr.h"

namespace speechchain {
namespace testing {

template <typename T>
double sequence_logp(const AsrModel<T>& model, const ag::Tensor<T>& enc,
                     const ag::Tensor<T>& enc_proj,
                     const std::vector<int>& emitted, bool ends_with_eos) {
  ag::NoGradGuard ng;
  typename nn::LstmCell<T>::State state = model.dec_lstm.initial_state();
  ag::Tensor<T> context = ag::Tensor<T>::zeros(1, model.cfg.enc_out_dim());
  double logp = 0.0;
  std::vector<int> outputs = emitted;
  if (ends_with_eos) outputs.push_back(model.cfg.eos_id);
  int prev = model.cfg.sos_id;
  for (int out : outputs) {
    const ag::Tensor<T> emb = ag::gather_rows(model.embedding, {prev});
    state = model.dec_lstm.step(ag::concat_cols<T>({emb, context}), state);
    const AttentionStep<T> att = model.attend_cached(enc_proj, enc, state.h);
    context = att.context;
    ag::Tensor<T> logits = model.out_proj.forward(
        ag::concat_cols<T>({state.h, context}));
    std::vector<T> masked = logits.value();
    masked[model.cfg.sos_id] = -std::numeric_limits<T>::infinity();
    const ag::Tensor<T> p = ag::softmax_rows(
        ag::Tensor<T>::from(std::move(masked), 1, model.cfg.n_classes));
    logp += std::log(std::max(static_cast<double>(p.at(0, out)), 1e-300));
    prev = out;
  }
  return logp;
}

template <typename T>
std::vector<int> exhaustive_decode(const AsrModel<T>& model,
                                   const ag::Tensor<T>& log_mel, int max_len) {
  ag::NoGradGuard ng;
  const ag::Tensor<T> enc = model.encode(log_mel);
  const ag::Tensor<T> enc_proj = model.att_enc.forward(enc);

  std::vector<int> symbols;
  for (int c = 0; c < model.cfg.n_classes; ++c)
    if (c != model.cfg.sos_id && c != model.cfg.eos_id) symbols.push_back(c);

  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> best;
  std::vector<int> seq;
  auto consider = [&](bool ends_with_eos) {
    const int emitted_len =
        static_cast<int>(seq.size()) + (ends_with_eos ? 1 : 0);
    if (emitted_len == 0) return;
    const double score =
        sequence_logp(model, enc, enc_proj, seq, ends_with_eos) / emitted_len;
    if (score > best_score) {
      best_score = score;
      best = seq;
    }
  };
  std::function<void(int)> recurse = [&](int depth) {
    // terminate here with the end tag (emitted length depth+1 <= max_len)
    if (depth < max_len) consider(true);
    if (depth == max_len) {
      consider(false);  // cut off, no end tag
      return;
    }
    for (int c : symbols) {
      seq.push_back(c);
      recurse(depth + 1);
      seq.pop_back();
    }
  };
  recurse(0);
  return best;
}

}  // namespace testing
}  // namespace speechchain

#endif  // SPEECHCHAIN_TESTS_BEAM_ORACLE_H_
