// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace apollo::wav {

enum class SampleFormat { pcm16, pcm24, float32 };

struct WavData {
  int64_t sample_rate = 44100;
  SampleFormat format = SampleFormat::pcm16;
  // one vector per channel, samples in [-1, 1]
  std::vector<std::vector<double>> channels;

  int64_t n_channels() const { return int64_t(channels.size()); }
  int64_t n_samples() const {
    return channels.empty() ? 0 : int64_t(channels[0].size());
  }
  std::vector<double> mono_mix() const;
};

WavData read(const std::string& path);
void write(const std::string& path, const WavData& data);

}  // namespace apollo::wav
