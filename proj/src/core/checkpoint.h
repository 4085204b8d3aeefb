// core/checkpoint.h
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

#ifndef SPEECHCHAIN_CORE_CHECKPOINT_H_
#define SPEECHCHAIN_CORE_CHECKPOINT_H_

#include <map>
#include <string>
#include <vector>

namespace speechchain {

// Binary tensor container used for checkpoints and feature dumps:
// an 8-byte little-endian header length, a JSON header describing each
// tensor (name, shape, dtype, byte offset), then a packed little-endian
// float32 payload. Round trips are bit-exact.

struct TensorEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct TensorArchive {
  std::vector<TensorEntry> tensors;
  std::map<std::string, std::string> metadata;

  const TensorEntry* find(const std::string& name) const;
  const TensorEntry& at(const std::string& name) const;
};

void write_tensor_archive(const std::string& path, const TensorArchive& archive);
TensorArchive read_tensor_archive(const std::string& path);

}  // namespace speechchain

#endif  // SPEECHCHAIN_CORE_CHECKPOINT_H_
