// dsp/wav.cc
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

#include "dsp/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace speechchain {
namespace dsp {

namespace {

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void write_u16(std::ofstream& out, uint16_t v) {
  out.write(reinterpret_cast<const char*>(&v), 2);
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint16_t read_u16(std::ifstream& in) {
  uint16_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 2);
  return v;
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav: " + path);
  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("not a RIFF file: " + path);
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("not a WAVE file: " + path);

  WavData wav;
  uint16_t channels = 0, bits = 0;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const uint32_t chunk_size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const uint16_t format = read_u16(in);
      channels = read_u16(in);
      wav.sample_rate = static_cast<int>(read_u32(in));
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      if (format != 1) throw std::runtime_error("wav is not PCM: " + path);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("wav data before fmt: " + path);
      if (channels != 1 || bits != 16)
        throw std::runtime_error("expected mono PCM16 wav: " + path);
      const size_t n = chunk_size / 2;
      std::vector<int16_t> raw(n);
      in.read(reinterpret_cast<char*>(raw.data()),
              static_cast<std::streamsize>(chunk_size));
      if (!in) throw std::runtime_error("truncated wav data: " + path);
      wav.samples.resize(n);
      for (size_t i = 0; i < n; ++i)
        wav.samples[i] = static_cast<float>(raw[i]) / 32768.0f;
      return wav;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw std::runtime_error("wav has no data chunk: " + path);
}

void write_wav(const std::string& path, const std::vector<float>& samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(sample_rate));
  write_u32(out, static_cast<uint32_t>(sample_rate * 2));
  write_u16(out, 2);   // block align
  write_u16(out, 16);  // bits
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (float s : samples) {
    const long v = std::lround(static_cast<double>(s) * 32768.0);
    const int16_t q = static_cast<int16_t>(std::clamp(v, -32768L, 32767L));
    out.write(reinterpret_cast<const char*>(&q), 2);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dsp
}  // namespace speechchain
