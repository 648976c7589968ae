// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apollo/common.hpp"

namespace apollo::data {

struct DataConfig {
  double clip_seconds = 3.0;
  int64_t min_stems = 1;
  int64_t max_stems = 8;
  double gain_db_lo = -10.0;
  double gain_db_hi = 10.0;
  std::vector<int64_t> bitrates = {24000, 32000, 48000, 64000, 96000, 128000};
  std::string degrade_method = "surrogate";  // surrogate | external
  std::string external_codec_cmd;            // placeholders {in} {out} {bitrate}
  double codec_timeout_s = 60.0;
  int64_t sample_rate = 44100;

  void validate() const;
};

struct SadConfig {
  double window_s = 0.5;
  double hop_s = 0.25;
  double threshold_db = -40.0;  // relative to the loudest window
  double merge_gap_s = 0.25;
};

// active [start, end) sample ranges via sliding-window RMS
std::vector<std::pair<int64_t, int64_t>> detect_activity(
    std::span<const double> wave, int64_t sample_rate,
    const SadConfig& cfg = {});

struct StemRecord {
  std::string track;
  std::string stem;
  std::string path;
  std::vector<double> samples;  // mono
  std::vector<std::pair<int64_t, int64_t>> active;
};

struct StemLibrary {
  int64_t sample_rate = 44100;
  std::vector<StemRecord> stems;
};

// walks a MUSDB18-HQ / MoisesDB style tree; returns manifest JSON
// [{"track":..., "stem":..., "path":...}, ...]
std::string scan_corpus(const std::string& root);

// reads every manifest entry's audio (mono downmix) and indexes activity
StemLibrary load_library(const std::string& manifest_path);

struct MixMeta {
  std::vector<std::string> stems;
  std::vector<double> gains_db;
  int64_t bitrate = 0;
};

// 1..8 random stems, random active-segment clips, +/-10 dB gains, summed
std::vector<double> sample_mixture(const StemLibrary& lib, Rng& rng,
                                   const DataConfig& cfg,
                                   MixMeta* meta = nullptr);

// zeroes all spectral content above cutoff; energy-non-increasing
std::vector<double> lowpass_brickwall(std::span<const double> x,
                                      double cutoff_hz, int64_t sample_rate);

double surrogate_cutoff_hz(int64_t bitrate);

std::vector<double> degrade(std::span<const double> target, int64_t bitrate,
                            const DataConfig& cfg, Rng& rng);

// divide both by max(peak(degraded), peak(target), eps)
void rescale_pair(std::vector<double>& degraded, std::vector<double>& target);

struct TrainBatch {
  std::vector<std::vector<double>> degraded;
  std::vector<std::vector<double>> target;
  std::vector<MixMeta> meta;
};

TrainBatch make_batch(const StemLibrary& lib, Rng& rng, int64_t batch_size,
                      const DataConfig& cfg);

}  // namespace apollo::data
