// models/serialize.h
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

#ifndef SPEECHCHAIN_MODELS_SERIALIZE_H_
#define SPEECHCHAIN_MODELS_SERIALIZE_H_

#include <stdexcept>
#include <string>

#include "core/checkpoint.h"
#include "core/nn.h"

namespace speechchain {

// Copies named float parameters into archive entries.
inline void params_to_archive(nn::ParamList<float>& params,
                              TensorArchive* archive) {
  for (auto& nt : params) {
    TensorEntry e;
    e.name = nt.name;
    e.shape = {nt.tensor.rows(), nt.tensor.cols()};
    e.data = nt.tensor.value();
    archive->tensors.push_back(std::move(e));
  }
}

// Loads values back by name, validating shapes. Every parameter must be
// present in the archive.
inline void params_from_archive(nn::ParamList<float>* params,
                                const TensorArchive& archive) {
  for (auto& nt : *params) {
    const TensorEntry& e = archive.at(nt.name);
    if (e.shape.size() != 2 || e.shape[0] != nt.tensor.rows() ||
        e.shape[1] != nt.tensor.cols())
      throw std::runtime_error("checkpoint shape mismatch for " + nt.name);
    nt.tensor.mutable_value() = e.data;
  }
}

}  // namespace speechchain

#endif  // SPEECHCHAIN_MODELS_SERIALIZE_H_
