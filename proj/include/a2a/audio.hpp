#pragma once

#include <string>
#include <vector>

namespace a2a {

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate = 16000;
};

// 16-bit PCM mono RIFF/WAVE only. Ints map to float as v / 32768.
AudioClip read_wav(const std::string& path);
void write_wav(const AudioClip& clip, const std::string& path);

}  // namespace a2a
