// dsp/wav.h
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

#ifndef SPEECHCHAIN_DSP_WAV_H_
#define SPEECHCHAIN_DSP_WAV_H_

#include <string>
#include <vector>

namespace speechchain {
namespace dsp {

// Mono PCM16 WAV only. Samples are int16/32768 as float.

struct WavData {
  std::vector<float> samples;
  int sample_rate = 0;
};

WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<float>& samples,
               int sample_rate);

}  // namespace dsp
}  // namespace speechchain

#endif  // SPEECHCHAIN_DSP_WAV_H_
