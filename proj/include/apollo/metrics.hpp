// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace apollo::metrics {

// Scale-invariant SNR in dB, capped at +/-100; nullopt for a silent
// reference. Both signals are mean-subtracted first.
std::optional<double> si_snr(std::span<const double> est,
                             std::span<const double> ref);

// Plain single-source SDR in dB, capped at +/-100; nullopt for silent ref.
std::optional<double> sdr(std::span<const double> est,
                          std::span<const double> ref);

struct RtfReport {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  int64_t iters = 0;
  double clip_seconds = 0.0;
};

// Wall-clock benchmark of a callable processing one clip; `warmup` runs are
// discarded before `iters` measured runs.
RtfReport bench_rtf(const std::function<void()>& run_once, int64_t iters,
                    int64_t warmup, double clip_seconds);

struct FileMetrics {
  std::string name;
  std::optional<double> si_snr_db;
  std::optional<double> sdr_db;
};

struct MetricReport {
  std::vector<FileMetrics> files;
  // means over files with defined values
  std::optional<double> mean_si_snr;
  std::optional<double> mean_sdr;
  void finalize();
};

std::string report_to_json(const MetricReport& r);
std::string report_to_csv(const MetricReport& r);

}  // namespace apollo::metrics
