// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "apollo/common.hpp"
#include "apollo/fft.hpp"

namespace apollo::dsp {

std::vector<double> make_window(const std::string& name, int64_t len) {
  check(len > 0, "window length must be positive");
  std::vector<double> w(len);
  if (name == "hann") {
    for (int64_t n = 0; n < len; n++)
      w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * double(n) / double(len));
  } else {
    throw std::invalid_argument("unknown window: " + name);
  }
  return w;
}

void StftConfig::validate() const {
  check(sample_rate > 0, "sample_rate must be positive");
  check(hop_len > 0, "hop_len must be positive");
  check(hop_len <= window_len, "hop_len must not exceed window_len");
  check(window_len <= fft_len, "window_len must not exceed fft_len");
  auto w = make_window(window, window_len);
  // constant-overlap-add: sum of shifted windows is flat
  double mn = 1e300, mx = -1e300;
  for (int64_t r = 0; r < hop_len; r++) {
    double s = 0.0;
    for (int64_t j = r; j < window_len; j += hop_len) s += w[j];
    mn = std::min(mn, s);
    mx = std::max(mx, s);
  }
  double mean = 0.5 * (mn + mx);
  check(mean > 0.0 && (mx - mn) < 1e-10 * mean,
        "window/hop pair does not satisfy the overlap-add condition");
}

int64_t StftConfig::n_frames(int64_t len) const {
  return detail::frame_layout(len, *this).n_frames;
}

namespace detail {

FrameLayout frame_layout(int64_t len, const StftConfig& cfg) {
  int64_t padded = len + 2 * cfg.pad();
  if (len < cfg.window_len)
    throw std::invalid_argument("signal shorter than one window");
  int64_t t = 1 + (padded - cfg.window_len) / cfg.hop_len;
  return FrameLayout{t, (t - 1) * cfg.hop_len + cfg.window_len};
}

std::vector<double> overlap_add(std::span<const cplx> spec_ft, int64_t n_bins,
                                int64_t n_frames, const StftConfig& cfg) {
  const int64_t w_len = cfg.window_len;
  const int64_t hop = cfg.hop_len;
  const int64_t fft_len = cfg.fft_len;
  auto window = make_window(cfg.window, w_len);
  int64_t out_len = (n_frames - 1) * hop + w_len;
  std::vector<double> acc(out_len, 0.0), env(out_len, 0.0);
  std::vector<cplx> col(n_bins);
  for (int64_t t = 0; t < n_frames; t++) {
    for (int64_t f = 0; f < n_bins; f++) col[f] = spec_ft[f * n_frames + t];
    auto frame = fft::irfft(col, fft_len);
    int64_t base = t * hop;
    for (int64_t n = 0; n < w_len; n++) {
      acc[base + n] += frame[n] * window[n];
      env[base + n] += window[n] * window[n];
    }
  }
  for (int64_t n = 0; n < out_len; n++)
    acc[n] = env[n] > 1e-12 ? acc[n] / env[n] : 0.0;
  return acc;
}

}  // namespace detail

std::vector<double> reflect_pad(std::span<const double> x, int64_t pad) {
  int64_t n = static_cast<int64_t>(x.size());
  check(pad < n, "reflect pad longer than signal");
  std::vector<double> y(n + 2 * pad);
  for (int64_t i = 0; i < pad; i++) y[i] = x[pad - i];
  for (int64_t i = 0; i < n; i++) y[pad + i] = x[i];
  for (int64_t i = 0; i < pad; i++) y[pad + n + i] = x[n - 2 - i];
  return y;
}

ComplexSpectrogram stft(std::span<const double> wave, const StftConfig& cfg) {
  cfg.validate();
  if (wave.empty() || int64_t(wave.size()) < cfg.window_len)
    throw std::invalid_argument("signal shorter than one window");
  for (double v : wave)
    if (!std::isfinite(v))
      throw std::invalid_argument("stft: non-finite sample");

  auto layout = detail::frame_layout(int64_t(wave.size()), cfg);
  auto padded = reflect_pad(wave, cfg.pad());
  auto window = make_window(cfg.window, cfg.window_len);

  ComplexSpectrogram out;
  out.config = cfg;
  out.n_bins = cfg.n_bins();
  out.n_frames = layout.n_frames;
  out.data.assign(out.n_bins * out.n_frames, cplx(0.0, 0.0));

  std::vector<double> frame(cfg.fft_len, 0.0);
  for (int64_t t = 0; t < layout.n_frames; t++) {
    int64_t base = t * cfg.hop_len;
    for (int64_t n = 0; n < cfg.window_len; n++)
      frame[n] = padded[base + n] * window[n];
    auto spec = fft::rfft(frame);
    for (int64_t f = 0; f < out.n_bins; f++)
      out.data[f * out.n_frames + t] = spec[f];
  }
  return out;
}

std::vector<double> istft(const ComplexSpectrogram& spec, int64_t out_len) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  check(spec.n_bins == cfg.n_bins(), "istft: bin count mismatch");
  for (const cplx& v : spec.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("istft: non-finite entry");
  if (out_len < cfg.window_len ||
      detail::frame_layout(out_len, cfg).n_frames != spec.n_frames)
    throw std::invalid_argument("istft: out_len inconsistent with frame count");

  auto padded = detail::overlap_add(spec.data, spec.n_bins, spec.n_frames, cfg);
  int64_t p = cfg.pad();
  return std::vector<double>(padded.begin() + p, padded.begin() + p + out_len);
}

int64_t BandPlan::total_bins() const {
  int64_t s = 0;
  for (int64_t m : bins_per_band) s += m;
  return s;
}

BandPlan make_band_plan(const StftConfig& cfg, double bandwidth_hz) {
  cfg.validate();
  double spacing = cfg.bin_spacing_hz();
  check(bandwidth_hz >= spacing,
        "bandwidth below bin spacing (" + std::to_string(spacing) + " Hz)");
  int64_t f = cfg.n_bins();
  int64_t per = std::llround(bandwidth_hz / spacing);
  per = std::clamp<int64_t>(per, 1, f);

  BandPlan plan;
  plan.bandwidth_hz = bandwidth_hz;
  int64_t start = 0;
  while (start < f) {
    int64_t end = std::min(start + per, f);
    plan.band_edges.emplace_back(start, end);
    plan.bins_per_band.push_back(end - start);
    start = end;
  }
  return plan;
}

std::vector<std::vector<cplx>> split_bands(const ComplexSpectrogram& spec,
                                           const BandPlan& plan) {
  check(plan.total_bins() == spec.n_bins,
        "band plan does not cover the spectrogram");
  std::vector<std::vector<cplx>> bands;
  bands.reserve(plan.n_bands());
  for (auto [start, end] : plan.band_edges) {
    bands.emplace_back(spec.data.begin() + start * spec.n_frames,
                       spec.data.begin() + end * spec.n_frames);
  }
  return bands;
}

ComplexSpectrogram merge_bands(const std::vector<std::vector<cplx>>& bands,
                               const BandPlan& plan, int64_t n_frames,
                               const StftConfig& cfg) {
  check(int64_t(bands.size()) == plan.n_bands(), "band count mismatch");
  ComplexSpectrogram out;
  out.config = cfg;
  out.n_bins = plan.total_bins();
  out.n_frames = n_frames;
  out.data.resize(out.n_bins * n_frames);
  int64_t row = 0;
  for (int64_t k = 0; k < plan.n_bands(); k++) {
    int64_t m = plan.bins_per_band[k];
    check(int64_t(bands[k].size()) == m * n_frames,
          "band " + std::to_string(k) + " shape mismatch");
    std::copy(bands[k].begin(), bands[k].end(),
              out.data.begin() + row * n_frames);
    row += m;
  }
  return out;
}

}  // namespace apollo::dsp
