// core/checkpoint.cc
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

#include "core/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace speechchain {

namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

uint64_t shape_numel(const std::vector<int>& shape) {
  uint64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= static_cast<uint64_t>(d);
  }
  return n;
}

}  // namespace

const TensorEntry* TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const TensorEntry& TensorArchive::at(const std::string& name) const {
  const TensorEntry* t = find(name);
  if (!t) throw std::out_of_range("tensor not in archive: " + name);
  return *t;
}

void write_tensor_archive(const std::string& path, const TensorArchive& archive) {
  nlohmann::json header = nlohmann::json::object();
  uint64_t offset = 0;
  for (const auto& t : archive.tensors) {
    if (shape_numel(t.shape) != t.data.size())
      throw std::invalid_argument("tensor '" + t.name +
                                  "' shape does not match data length");
    const uint64_t nbytes = t.data.size() * sizeof(float);
    header[t.name] = {{"dtype", "f32"},
                      {"shape", t.shape},
                      {"offset", offset},
                      {"nbytes", nbytes}};
    offset += nbytes;
  }
  if (!archive.metadata.empty()) header["__meta__"] = archive.metadata;

  const std::string header_str = header.dump();
  const uint64_t header_len = header_str.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_len));
  for (const auto& t : archive.tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

TensorArchive read_tensor_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) throw std::runtime_error("truncated container: " + path);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("truncated header: " + path);
  nlohmann::json header = nlohmann::json::parse(header_str);

  TensorArchive archive;
  // Recover payload ordering from offsets so byte layout round trips.
  std::vector<std::pair<uint64_t, std::string>> order;
  for (auto it = header.begin(); it != header.end(); ++it) {
    if (it.key() == "__meta__") {
      archive.metadata =
          it.value().get<std::map<std::string, std::string>>();
      continue;
    }
    order.emplace_back(it.value().at("offset").get<uint64_t>(), it.key());
  }
  std::sort(order.begin(), order.end());

  const std::streampos payload_start = in.tellg();
  for (const auto& [offset, name] : order) {
    const auto& spec = header.at(name);
    if (spec.at("dtype").get<std::string>() != "f32")
      throw std::runtime_error("unsupported dtype in container: " + path);
    TensorEntry t;
    t.name = name;
    t.shape = spec.at("shape").get<std::vector<int>>();
    const uint64_t nbytes = spec.at("nbytes").get<uint64_t>();
    if (nbytes != shape_numel(t.shape) * sizeof(float))
      throw std::runtime_error("tensor '" + name + "' byte size mismatch");
    t.data.resize(nbytes / sizeof(float));
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(nbytes));
    if (!in) throw std::runtime_error("truncated payload: " + path);
    archive.tensors.push_back(std::move(t));
  }
  return archive;
}

}  // namespace speechchain
