// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace apollo::dsp {

using cplx = std::complex<double>;

struct StftConfig {
  int64_t sample_rate = 44100;
  int64_t window_len = 882;  // 20 ms
  int64_t hop_len = 441;     // 10 ms
  std::string window = "hann";
  int64_t fft_len = 882;

  void validate() const;

  double bin_spacing_hz() const {
    return double(sample_rate) / double(fft_len);
  }
  int64_t n_bins() const { return fft_len / 2 + 1; }
  int64_t pad() const { return window_len - hop_len; }
  // frames produced for an input of length len (reflect-padded both sides)
  int64_t n_frames(int64_t len) const;
};

struct ComplexSpectrogram {
  // row-major F x T
  std::vector<cplx> data;
  int64_t n_bins = 0;
  int64_t n_frames = 0;
  StftConfig config;

  cplx& at(int64_t f, int64_t t) { return data[f * n_frames + t]; }
  const cplx& at(int64_t f, int64_t t) const { return data[f * n_frames + t]; }
};

struct BandPlan {
  std::vector<std::pair<int64_t, int64_t>> band_edges;  // [start, end) bins
  double bandwidth_hz = 160.0;
  std::vector<int64_t> bins_per_band;

  int64_t n_bands() const { return int64_t(band_edges.size()); }
  int64_t total_bins() const;
};

// periodic window of the given length
std::vector<double> make_window(const std::string& name, int64_t len);

std::vector<double> reflect_pad(std::span<const double> x, int64_t pad);

ComplexSpectrogram stft(std::span<const double> wave, const StftConfig& cfg);

std::vector<double> istft(const ComplexSpectrogram& spec, int64_t out_len);

BandPlan make_band_plan(const StftConfig& cfg, double bandwidth_hz);

std::vector<std::vector<cplx>> split_bands(const ComplexSpectrogram& spec,
                                           const BandPlan& plan);

ComplexSpectrogram merge_bands(const std::vector<std::vector<cplx>>& bands,
                               const BandPlan& plan, int64_t n_frames,
                               const StftConfig& cfg);

// Framing kernels shared with the differentiable signal ops.
namespace detail {
// padded+extended buffer and framing geometry for a given input length
struct FrameLayout {
  int64_t n_frames;
  int64_t padded_len;  // (n_frames-1)*hop + window
};
FrameLayout frame_layout(int64_t len, const StftConfig& cfg);

// spec values (re, im interleaved as two planes F*T each) -> time signal of
// padded_len, WOLA with squared-window envelope; no trimming
std::vector<double> overlap_add(std::span<const cplx> spec_ft, int64_t n_bins,
                                int64_t n_frames, const StftConfig& cfg);
}  // namespace detail

}  // namespace apollo::dsp
