// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/signal_ops.hpp"

#include <cmath>

#include "apollo/fft.hpp"

namespace apollo::sig {

using ag::Node;
using ag::NodePtr;
using ag::Shape;
using dsp::cplx;

namespace {

NodePtr new_node(const Shape& shape) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(size_t(ag::shape_numel(shape)), 0.0);
  return n;
}

}  // namespace

Tensor stft_op(const Tensor& wave, const dsp::StftConfig& cfg) {
  check(wave.rank() == 1, "stft_op: wave must be rank 1");
  auto spec = dsp::stft(std::span<const double>(wave.data(), size_t(wave.numel())), cfg);
  int64_t f = spec.n_bins, t = spec.n_frames;
  auto out = new_node({2, f, t});
  for (int64_t i = 0; i < f * t; i++) {
    out->value[size_t(i)] = spec.data[size_t(i)].real();
    out->value[size_t(f * t + i)] = spec.data[size_t(i)].imag();
  }
  if (wave.requires_grad()) {
    out->requires_grad = true;
    out->parents = {wave.node()};
    Node* self = out.get();
    NodePtr wn = wave.node();
    int64_t len = wave.numel();
    out->backward_fn = [self, wn, cfg, f, t, len]() {
      const double* g = self->grad.data();
      double* gw = wn->ensure_grad();
      auto window = dsp::make_window(cfg.window, cfg.window_len);
      int64_t pad = cfg.pad();
      int64_t padded_total = len + 2 * pad;
      std::vector<double> gpad(static_cast<size_t>(padded_total), 0.0);
      std::vector<cplx> col(static_cast<size_t>(f));
      for (int64_t tt = 0; tt < t; tt++) {
        for (int64_t ff = 0; ff < f; ff++)
          col[size_t(ff)] = cplx(g[ff * t + tt], g[f * t + ff * t + tt]);
        auto gframe = fft::rfft_adjoint(col, cfg.fft_len);
        int64_t base = tt * cfg.hop_len;
        for (int64_t n = 0; n < cfg.window_len; n++)
          gpad[size_t(base + n)] += gframe[size_t(n)] * window[size_t(n)];
      }
      // adjoint of reflect padding
      for (int64_t i = 0; i < len; i++) gw[i] += gpad[size_t(pad + i)];
      for (int64_t i = 0; i < pad; i++) {
        gw[pad - i] += gpad[size_t(i)];
        gw[len - 2 - i] += gpad[size_t(pad + len + i)];
      }
    };
  }
  return Tensor(out);
}

Tensor istft_op(const Tensor& spec, const dsp::StftConfig& cfg,
                int64_t out_len) {
  check(spec.rank() == 3 && spec.dim(0) == 2, "istft_op: spec must be (2,F,T)");
  int64_t f = spec.dim(1), t = spec.dim(2);
  check(f == cfg.n_bins(), "istft_op: bin count mismatch");
  check(out_len >= cfg.window_len &&
            dsp::detail::frame_layout(out_len, cfg).n_frames == t,
        "istft_op: out_len inconsistent with frame count");

  std::vector<cplx> cdata(static_cast<size_t>(f * t));
  const double* sd = spec.data();
  for (int64_t i = 0; i < f * t; i++)
    cdata[size_t(i)] = cplx(sd[i], sd[f * t + i]);
  auto padded = dsp::detail::overlap_add(cdata, f, t, cfg);
  int64_t p = cfg.pad();

  auto out = new_node({out_len});
  for (int64_t i = 0; i < out_len; i++) out->value[size_t(i)] = padded[size_t(p + i)];

  if (spec.requires_grad()) {
    out->requires_grad = true;
    out->parents = {spec.node()};
    Node* self = out.get();
    NodePtr sn = spec.node();
    out->backward_fn = [self, sn, cfg, f, t, out_len]() {
      const double* g = self->grad.data();
      double* gs = sn->ensure_grad();
      auto window = dsp::make_window(cfg.window, cfg.window_len);
      int64_t p = cfg.pad();
      int64_t padded_len = (t - 1) * cfg.hop_len + cfg.window_len;
      // envelope used by the forward normalization
      std::vector<double> env(static_cast<size_t>(padded_len), 0.0);
      for (int64_t tt = 0; tt < t; tt++) {
        int64_t base = tt * cfg.hop_len;
        for (int64_t n = 0; n < cfg.window_len; n++)
          env[size_t(base + n)] += window[size_t(n)] * window[size_t(n)];
      }
      std::vector<double> gpad(static_cast<size_t>(padded_len), 0.0);
      for (int64_t i = 0; i < out_len; i++) {
        double e = env[size_t(p + i)];
        gpad[size_t(p + i)] = e > 1e-12 ? g[i] / e : 0.0;
      }
      std::vector<double> gframe(static_cast<size_t>(cfg.fft_len), 0.0);
      for (int64_t tt = 0; tt < t; tt++) {
        int64_t base = tt * cfg.hop_len;
        std::fill(gframe.begin(), gframe.end(), 0.0);
        for (int64_t n = 0; n < cfg.window_len; n++)
          gframe[size_t(n)] = gpad[size_t(base + n)] * window[size_t(n)];
        auto gcol = fft::irfft_adjoint(gframe);
        for (int64_t ff = 0; ff < f; ff++) {
          gs[ff * t + tt] += gcol[size_t(ff)].real();
          gs[f * t + ff * t + tt] += gcol[size_t(ff)].imag();
        }
      }
    };
  }
  return Tensor(out);
}

Tensor magnitude(const Tensor& spec, double eps) {
  check(spec.rank() >= 2 && spec.dim(0) == 2, "magnitude: leading dim must be 2");
  Shape out_shape(spec.shape().begin() + 1, spec.shape().end());
  int64_t n = ag::shape_numel(out_shape);
  auto out = new_node(out_shape);
  const double* sd = spec.data();
  for (int64_t i = 0; i < n; i++)
    out->value[size_t(i)] = std::sqrt(sd[i] * sd[i] + sd[n + i] * sd[n + i]);
  if (spec.requires_grad()) {
    out->requires_grad = true;
    out->parents = {spec.node()};
    Node* self = out.get();
    NodePtr sn = spec.node();
    out->backward_fn = [self, sn, n, eps]() {
      const double* g = self->grad.data();
      const double* sd = sn->value.data();
      const double* y = self->value.data();
      double* gs = sn->ensure_grad();
      for (int64_t i = 0; i < n; i++) {
        double m = std::max(y[i], eps);
        gs[i] += g[i] * sd[i] / m;
        gs[n + i] += g[i] * sd[n + i] / m;
      }
    };
  }
  return Tensor(out);
}

Tensor l2_normalize(const Tensor& x, double eps) {
  int64_t n = x.numel();
  const double* xd = x.data();
  double ss = 0.0;
  for (int64_t i = 0; i < n; i++) ss += xd[i] * xd[i];
  double r = std::max(std::sqrt(ss), eps);
  auto out = new_node(x.shape());
  for (int64_t i = 0; i < n; i++) out->value[size_t(i)] = xd[i] / r;
  if (x.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node()};
    Node* self = out.get();
    NodePtr xn = x.node();
    out->backward_fn = [self, xn, n, r]() {
      const double* g = self->grad.data();
      const double* xd = xn->value.data();
      double* gx = xn->ensure_grad();
      double proj = 0.0;
      for (int64_t i = 0; i < n; i++) proj += g[i] * xd[i];
      double r3 = r * r * r;
      for (int64_t i = 0; i < n; i++) gx[i] += g[i] / r - xd[i] * proj / r3;
    };
  }
  return Tensor(out);
}

Tensor spectrogram_to_tensor(const dsp::ComplexSpectrogram& spec) {
  int64_t f = spec.n_bins, t = spec.n_frames;
  auto out = new_node({2, f, t});
  for (int64_t i = 0; i < f * t; i++) {
    out->value[size_t(i)] = spec.data[size_t(i)].real();
    out->value[size_t(f * t + i)] = spec.data[size_t(i)].imag();
  }
  return Tensor(out);
}

dsp::ComplexSpectrogram tensor_to_spectrogram(const Tensor& t,
                                              const dsp::StftConfig& cfg) {
  check(t.rank() == 3 && t.dim(0) == 2, "tensor_to_spectrogram: shape");
  dsp::ComplexSpectrogram spec;
  spec.config = cfg;
  spec.n_bins = t.dim(1);
  spec.n_frames = t.dim(2);
  int64_t n = spec.n_bins * spec.n_frames;
  spec.data.resize(size_t(n));
  const double* d = t.data();
  for (int64_t i = 0; i < n; i++) spec.data[size_t(i)] = cplx(d[i], d[n + i]);
  return spec;
}

}  // namespace apollo::sig
