// models/model_io.h
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

#ifndef SPEECHCHAIN_MODELS_MODEL_IO_H_
#define SPEECHCHAIN_MODELS_MODEL_IO_H_

// Float checkpoints for the three networks. The container metadata carries
// the architecture dimensions (so a model can be reconstructed from its file
// alone) and the alphabet fingerprint for compatibility validation.

#include <map>
#include <string>

#include "core/checkpoint.h"
#include "core/rng.h"
#include "models/asr.h"
#include "models/serialize.h"
#include "models/speaker_encoder.h"
#include "models/tts.h"
#include "text/alphabet.h"

namespace speechchain {

namespace model_io {

inline void put_int(std::map<std::string, std::string>* meta,
                    const std::string& key, int v) {
  (*meta)[key] = std::to_string(v);
}

inline int get_int(const std::map<std::string, std::string>& meta,
                   const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end())
    throw std::runtime_error("checkpoint metadata missing key: " + key);
  return std::stoi(it->second);
}

inline void check_alphabet(const std::map<std::string, std::string>& meta) {
  auto it = meta.find("alphabet");
  if (it == meta.end())
    throw std::runtime_error("checkpoint metadata missing the alphabet");
  if (it->second != text::Alphabet().fingerprint())
    throw std::runtime_error(
        "checkpoint alphabet does not match this build's alphabet");
}

}  // namespace model_io

inline void save_asr(const std::string& path, AsrModel<float>& model) {
  TensorArchive a;
  a.metadata["model"] = "asr";
  a.metadata["alphabet"] = text::Alphabet().fingerprint();
  auto* m = &a.metadata;
  model_io::put_int(m, "n_mels", model.cfg.n_mels);
  model_io::put_int(m, "enc_hidden", model.cfg.enc_hidden);
  model_io::put_int(m, "enc_layers", model.cfg.enc_layers);
  model_io::put_int(m, "dec_embed", model.cfg.dec_embed);
  model_io::put_int(m, "dec_hidden", model.cfg.dec_hidden);
  model_io::put_int(m, "att_dim", model.cfg.att_dim);
  model_io::put_int(m, "n_classes", model.cfg.n_classes);
  auto params = model.parameters();
  params_to_archive(params, &a);
  write_tensor_archive(path, a);
}

inline AsrModel<float> load_asr(const std::string& path) {
  TensorArchive a = read_tensor_archive(path);
  model_io::check_alphabet(a.metadata);
  AsrConfig cfg;
  cfg.n_mels = model_io::get_int(a.metadata, "n_mels");
  cfg.enc_hidden = model_io::get_int(a.metadata, "enc_hidden");
  cfg.enc_layers = model_io::get_int(a.metadata, "enc_layers");
  cfg.dec_embed = model_io::get_int(a.metadata, "dec_embed");
  cfg.dec_hidden = model_io::get_int(a.metadata, "dec_hidden");
  cfg.att_dim = model_io::get_int(a.metadata, "att_dim");
  cfg.n_classes = model_io::get_int(a.metadata, "n_classes");
  Rng rng(0);
  AsrModel<float> model(cfg, &rng);
  auto params = model.parameters();
  params_from_archive(&params, a);
  return model;
}

inline void save_tts(const std::string& path, TtsModel<float>& model) {
  TensorArchive a;
  a.metadata["model"] = "tts";
  a.metadata["alphabet"] = text::Alphabet().fingerprint();
  auto* m = &a.metadata;
  const TtsConfig& c = model.cfg;
  model_io::put_int(m, "n_classes", c.n_classes);
  model_io::put_int(m, "embed_dim", c.embed_dim);
  model_io::put_int(m, "enc_prenet1", c.enc_prenet1);
  model_io::put_int(m, "enc_prenet2", c.enc_prenet2);
  model_io::put_int(m, "enc_bank_k", c.enc_cbhg.bank_k);
  model_io::put_int(m, "enc_bank_channels", c.enc_cbhg.bank_channels);
  model_io::put_int(m, "enc_proj_channels", c.enc_cbhg.proj_channels);
  model_io::put_int(m, "enc_highway_dim", c.enc_cbhg.highway_dim);
  model_io::put_int(m, "enc_highway_layers", c.enc_cbhg.highway_layers);
  model_io::put_int(m, "enc_gru", c.enc_cbhg.gru_hidden);
  model_io::put_int(m, "spk_dim", c.spk_dim);
  model_io::put_int(m, "dec_prenet1", c.dec_prenet1);
  model_io::put_int(m, "dec_prenet2", c.dec_prenet2);
  model_io::put_int(m, "dec_hidden", c.dec_hidden);
  model_io::put_int(m, "att_dim", c.att_dim);
  model_io::put_int(m, "n_mels", c.n_mels);
  model_io::put_int(m, "frames_per_step", c.frames_per_step);
  model_io::put_int(m, "spk_proj_out", c.spk_proj_out);
  model_io::put_int(m, "out_fc", c.out_fc);
  model_io::put_int(m, "post_bank_k", c.post_cbhg.bank_k);
  model_io::put_int(m, "post_bank_channels", c.post_cbhg.bank_channels);
  model_io::put_int(m, "post_proj_channels", c.post_cbhg.proj_channels);
  model_io::put_int(m, "post_highway_dim", c.post_cbhg.highway_dim);
  model_io::put_int(m, "post_highway_layers", c.post_cbhg.highway_layers);
  model_io::put_int(m, "post_gru", c.post_cbhg.gru_hidden);
  model_io::put_int(m, "n_linear", c.n_linear);
  auto params = model.parameters();
  params_to_archive(params, &a);
  write_tensor_archive(path, a);
}

inline TtsModel<float> load_tts(const std::string& path) {
  TensorArchive a = read_tensor_archive(path);
  model_io::check_alphabet(a.metadata);
  const auto& m = a.metadata;
  TtsConfig c;
  c.n_classes = model_io::get_int(m, "n_classes");
  c.embed_dim = model_io::get_int(m, "embed_dim");
  c.enc_prenet1 = model_io::get_int(m, "enc_prenet1");
  c.enc_prenet2 = model_io::get_int(m, "enc_prenet2");
  c.enc_cbhg.in_dim = c.enc_prenet2;
  c.enc_cbhg.bank_k = model_io::get_int(m, "enc_bank_k");
  c.enc_cbhg.bank_channels = model_io::get_int(m, "enc_bank_channels");
  c.enc_cbhg.proj_channels = model_io::get_int(m, "enc_proj_channels");
  c.enc_cbhg.highway_dim = model_io::get_int(m, "enc_highway_dim");
  c.enc_cbhg.highway_layers = model_io::get_int(m, "enc_highway_layers");
  c.enc_cbhg.gru_hidden = model_io::get_int(m, "enc_gru");
  c.spk_dim = model_io::get_int(m, "spk_dim");
  c.dec_prenet1 = model_io::get_int(m, "dec_prenet1");
  c.dec_prenet2 = model_io::get_int(m, "dec_prenet2");
  c.dec_hidden = model_io::get_int(m, "dec_hidden");
  c.att_dim = model_io::get_int(m, "att_dim");
  c.n_mels = model_io::get_int(m, "n_mels");
  c.frames_per_step = model_io::get_int(m, "frames_per_step");
  c.spk_proj_out = model_io::get_int(m, "spk_proj_out");
  c.out_fc = model_io::get_int(m, "out_fc");
  c.post_cbhg.in_dim = c.n_mels;
  c.post_cbhg.bank_k = model_io::get_int(m, "post_bank_k");
  c.post_cbhg.bank_channels = model_io::get_int(m, "post_bank_channels");
  c.post_cbhg.proj_channels = model_io::get_int(m, "post_proj_channels");
  c.post_cbhg.highway_dim = model_io::get_int(m, "post_highway_dim");
  c.post_cbhg.highway_layers = model_io::get_int(m, "post_highway_layers");
  c.post_cbhg.gru_hidden = model_io::get_int(m, "post_gru");
  c.n_linear = model_io::get_int(m, "n_linear");
  Rng rng(0);
  TtsModel<float> model(c, &rng);
  auto params = model.parameters();
  params_from_archive(&params, a);
  return model;
}

inline void save_speaker_encoder(const std::string& path,
                                 SpeakerEncoder<float>& model) {
  TensorArchive a;
  a.metadata["model"] = "spkrec";
  a.metadata["alphabet"] = text::Alphabet().fingerprint();
  auto* m = &a.metadata;
  model_io::put_int(m, "n_mels", model.cfg.n_mels);
  model_io::put_int(m, "conv_channels", model.cfg.conv_channels);
  model_io::put_int(m, "conv_width", model.cfg.conv_width);
  model_io::put_int(m, "embed_dim", model.cfg.embed_dim);
  auto params = model.parameters();
  params_to_archive(params, &a);
  write_tensor_archive(path, a);
}

inline SpeakerEncoder<float> load_speaker_encoder(const std::string& path) {
  TensorArchive a = read_tensor_archive(path);
  model_io::check_alphabet(a.metadata);
  SpeakerEncoderConfig cfg;
  cfg.n_mels = model_io::get_int(a.metadata, "n_mels");
  cfg.conv_channels = model_io::get_int(a.metadata, "conv_channels");
  cfg.conv_width = model_io::get_int(a.metadata, "conv_width");
  cfg.embed_dim = model_io::get_int(a.metadata, "embed_dim");
  Rng rng(0);
  SpeakerEncoder<float> model(cfg, &rng);
  auto params = model.parameters();
  params_from_archive(&params, a);
  return model;
}

}  // namespace speechchain

#endif  // SPEECHCHAIN_MODELS_MODEL_IO_H_
