// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/nn.hpp"

#include <algorithm>
#include <cmath>

namespace apollo::nn {

using ag::Node;
using ag::NodePtr;
using ag::Shape;

namespace {

NodePtr new_node(const Shape& shape) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(size_t(ag::shape_numel(shape)), 0.0);
  return n;
}

int normalize_axis(int axis, int rank) {
  if (axis < 0) axis += rank;
  check(axis >= 0 && axis < rank, "bad axis");
  return axis;
}

}  // namespace

Tensor rms_norm(const Tensor& x, const Tensor& gain, int axis, double eps) {
  int r = x.rank();
  int a = normalize_axis(axis, r);
  int64_t n = x.dim(a);
  check(n > 0, "rms_norm: zero-size dimension");
  check(gain.rank() == 1 && gain.dim(0) == n,
        "rms_norm: gain length must match the normalized dimension");

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; i++) outer *= x.dim(i);
  for (int i = a + 1; i < r; i++) inner *= x.dim(i);

  auto out = new_node(x.shape());
  const double* xd = x.data();
  const double* gd = gain.data();
  double* yd = out->value.data();
  // per-group inverse rms, kept for backward
  auto inv_rms = std::make_shared<std::vector<double>>(size_t(outer * inner));
  for (int64_t o = 0; o < outer; o++) {
    for (int64_t h = 0; h < inner; h++) {
      const double* xg = xd + o * n * inner + h;
      double ss = 0.0;
      for (int64_t i = 0; i < n; i++) {
        double v = xg[i * inner];
        ss += v * v;
      }
      double inv = 1.0 / std::sqrt(ss / double(n) + eps);
      (*inv_rms)[size_t(o * inner + h)] = inv;
      double* yg = yd + o * n * inner + h;
      for (int64_t i = 0; i < n; i++) yg[i * inner] = gd[i] * xg[i * inner] * inv;
    }
  }

  if (x.requires_grad() || gain.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node(), gain.node()};
    Node* self = out.get();
    NodePtr xn = x.node(), gn = gain.node();
    out->backward_fn = [self, xn, gn, inv_rms, outer, inner, n]() {
      const double* g = self->grad.data();
      const double* xd = xn->value.data();
      const double* gd = gn->value.data();
      double* gx = xn->requires_grad ? xn->ensure_grad() : nullptr;
      double* gg = gn->requires_grad ? gn->ensure_grad() : nullptr;
      for (int64_t o = 0; o < outer; o++) {
        for (int64_t h = 0; h < inner; h++) {
          double inv = (*inv_rms)[size_t(o * inner + h)];
          const double* xg = xd + o * n * inner + h;
          const double* gout = g + o * n * inner + h;
          if (gx) {
            double proj = 0.0;
            for (int64_t i = 0; i < n; i++)
              proj += gout[i * inner] * gd[i] * xg[i * inner];
            double c = proj * inv * inv * inv / double(n);
            double* gxg = gx + o * n * inner + h;
            for (int64_t i = 0; i < n; i++)
              gxg[i * inner] += gout[i * inner] * gd[i] * inv - xg[i * inner] * c;
          }
          if (gg) {
            for (int64_t i = 0; i < n; i++)
              gg[i] += gout[i * inner] * xg[i * inner] * inv;
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor glu(const Tensor& x, int axis) {
  int a = normalize_axis(axis, x.rank());
  int64_t d = x.dim(a);
  check(d % 2 == 0, "glu: dimension must be even");
  Tensor lin = ag::slice(x, a, 0, d / 2);
  Tensor gate = ag::slice(x, a, d / 2, d);
  return ag::mul(lin, ag::sigmoid(gate));
}

Tensor gelu(const Tensor& x) {
  auto out = new_node(x.shape());
  const double* xd = x.data();
  for (size_t i = 0; i < out->value.size(); i++) {
    double v = xd[i];
    out->value[i] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  if (x.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node()};
    Node* self = out.get();
    NodePtr xn = x.node();
    out->backward_fn = [self, xn]() {
      double* gx = xn->ensure_grad();
      const double* g = self->grad.data();
      const double* xd = xn->value.data();
      constexpr double inv_sqrt_2pi = 0.3989422804014327;
      for (size_t i = 0; i < self->value.size(); i++) {
        double v = xd[i];
        double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
        double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        gx[i] += g[i] * (cdf + v * pdf);
      }
    };
  }
  return Tensor(out);
}

Tensor leaky_relu(const Tensor& x, double slope) {
  auto out = new_node(x.shape());
  const double* xd = x.data();
  for (size_t i = 0; i < out->value.size(); i++)
    out->value[i] = xd[i] > 0.0 ? xd[i] : slope * xd[i];
  if (x.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node()};
    Node* self = out.get();
    NodePtr xn = x.node();
    out->backward_fn = [self, xn, slope]() {
      double* gx = xn->ensure_grad();
      const double* g = self->grad.data();
      const double* xd = xn->value.data();
      for (size_t i = 0; i < self->value.size(); i++)
        gx[i] += g[i] * (xd[i] > 0.0 ? 1.0 : slope);
    };
  }
  return Tensor(out);
}

Tensor softmax(const Tensor& x, bool causal) {
  int r = x.rank();
  check(r >= 1, "softmax: rank");
  int64_t cols = x.dim(r - 1);
  int64_t p = r >= 2 ? x.dim(r - 2) : 1;
  if (causal) {
    check(r >= 2 && p == cols, "softmax: causal mask needs square last dims");
  }
  int64_t rows = x.numel() / cols;

  auto out = new_node(x.shape());
  const double* xd = x.data();
  double* yd = out->value.data();
  for (int64_t row = 0; row < rows; row++) {
    int64_t valid = causal ? (row % p) + 1 : cols;
    const double* xr = xd + row * cols;
    double* yr = yd + row * cols;
    double mx = -1e300;
    for (int64_t j = 0; j < valid; j++) mx = std::max(mx, xr[j]);
    double s = 0.0;
    for (int64_t j = 0; j < valid; j++) {
      yr[j] = std::exp(xr[j] - mx);
      s += yr[j];
    }
    double inv = 1.0 / s;
    for (int64_t j = 0; j < valid; j++) yr[j] *= inv;
    for (int64_t j = valid; j < cols; j++) yr[j] = 0.0;
  }

  if (x.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node()};
    Node* self = out.get();
    NodePtr xn = x.node();
    out->backward_fn = [self, xn, rows, cols, p, causal]() {
      double* gx = xn->ensure_grad();
      const double* g = self->grad.data();
      const double* y = self->value.data();
      for (int64_t row = 0; row < rows; row++) {
        int64_t valid = causal ? (row % p) + 1 : cols;
        const double* gr = g + row * cols;
        const double* yr = y + row * cols;
        double acc = 0.0;
        for (int64_t j = 0; j < valid; j++) acc += gr[j] * yr[j];
        double* gxr = gx + row * cols;
        for (int64_t j = 0; j < valid; j++)
          gxr[j] += yr[j] * (gr[j] - acc);
      }
    };
  }
  return Tensor(out);
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  int64_t n = x.dim(x.rank() - 1);
  check(b.rank() == 1 && b.dim(0) == n, "add_rowvec: length mismatch");
  auto out = new_node(x.shape());
  const double* xd = x.data();
  const double* bd = b.data();
  int64_t rows = x.numel() / n;
  for (int64_t r = 0; r < rows; r++)
    for (int64_t j = 0; j < n; j++)
      out->value[size_t(r * n + j)] = xd[r * n + j] + bd[j];
  if (x.requires_grad() || b.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node(), b.node()};
    Node* self = out.get();
    NodePtr xn = x.node(), bn = b.node();
    out->backward_fn = [self, xn, bn, rows, n]() {
      const double* g = self->grad.data();
      if (xn->requires_grad) {
        double* gx = xn->ensure_grad();
        for (int64_t i = 0; i < rows * n; i++) gx[i] += g[i];
      }
      if (bn->requires_grad) {
        double* gb = bn->ensure_grad();
        for (int64_t r = 0; r < rows; r++)
          for (int64_t j = 0; j < n; j++) gb[j] += g[r * n + j];
      }
    };
  }
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// convolutions

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              int64_t stride, int64_t dilation, PadMode pad_mode,
              int64_t groups) {
  check(stride >= 1 && dilation >= 1 && groups >= 1,
        "conv1d: invalid hyperparameters");
  bool batched = x.rank() == 3;
  check(batched || x.rank() == 2, "conv1d: input must be (C,T) or (B,C,T)");
  check(w.rank() == 3, "conv1d: weight must be (C_out, C_in/groups, k)");
  int64_t batch = batched ? x.dim(0) : 1;
  int64_t c_in = x.dim(batched ? 1 : 0);
  int64_t t_in = x.dim(batched ? 2 : 1);
  int64_t c_out = w.dim(0);
  int64_t cpg = w.dim(1);  // channels per group
  int64_t k = w.dim(2);
  check(c_in % groups == 0 && c_out % groups == 0,
        "conv1d: channels not divisible by groups");
  check(cpg == c_in / groups, "conv1d: weight channel mismatch");
  if (b.defined()) check(b.rank() == 1 && b.dim(0) == c_out, "conv1d: bias");

  int64_t span = dilation * (k - 1);
  int64_t pad_total = span;
  int64_t pad_left = pad_mode == PadMode::causal ? pad_total : pad_total / 2;
  check(t_in + pad_total >= span + 1, "conv1d: kernel does not fit input");
  int64_t t_out = (t_in + pad_total - span - 1) / stride + 1;

  Shape out_shape =
      batched ? Shape{batch, c_out, t_out} : Shape{c_out, t_out};
  auto out = new_node(out_shape);
  const double* xd = x.data();
  const double* wd = w.data();
  double* yd = out->value.data();
  int64_t out_per_group = c_out / groups;

  for (int64_t bb = 0; bb < batch; bb++) {
    const double* xb = xd + bb * c_in * t_in;
    double* yb = yd + bb * c_out * t_out;
    for (int64_t co = 0; co < c_out; co++) {
      int64_t gidx = co / out_per_group;
      double* yrow = yb + co * t_out;
      if (b.defined()) {
        double bv = b.data()[co];
        for (int64_t t = 0; t < t_out; t++) yrow[t] = bv;
      }
      for (int64_t ci = 0; ci < cpg; ci++) {
        const double* xrow = xb + (gidx * cpg + ci) * t_in;
        const double* wrow = wd + (co * cpg + ci) * k;
        for (int64_t kk = 0; kk < k; kk++) {
          double wv = wrow[kk];
          int64_t off = kk * dilation - pad_left;
          // valid t: 0 <= t*stride + off < t_in
          int64_t t0 = off < 0 ? (-off + stride - 1) / stride : 0;
          int64_t t1 = (t_in - 1 - off) / stride + 1;
          t1 = std::min(t1, t_out);
          for (int64_t t = t0; t < t1; t++)
            yrow[t] += wv * xrow[t * stride + off];
        }
      }
    }
  }

  if (x.requires_grad() || w.requires_grad() ||
      (b.defined() && b.requires_grad())) {
    out->requires_grad = true;
    out->parents = {x.node(), w.node()};
    if (b.defined()) out->parents.push_back(b.node());
    Node* self = out.get();
    NodePtr xn = x.node(), wn = w.node();
    NodePtr bn = b.defined() ? b.node() : nullptr;
    out->backward_fn = [self, xn, wn, bn, batch, c_in, t_in, c_out, cpg, k,
                        stride, dilation, pad_left, t_out, out_per_group]() {
      const double* g = self->grad.data();
      const double* xd = xn->value.data();
      const double* wd = wn->value.data();
      double* gx = xn->requires_grad ? xn->ensure_grad() : nullptr;
      double* gw = wn->requires_grad ? wn->ensure_grad() : nullptr;
      double* gb = bn && bn->requires_grad ? bn->ensure_grad() : nullptr;
      for (int64_t bb = 0; bb < batch; bb++) {
        const double* xb = xd + bb * c_in * t_in;
        const double* gbatch = g + bb * c_out * t_out;
        double* gxb = gx ? gx + bb * c_in * t_in : nullptr;
        for (int64_t co = 0; co < c_out; co++) {
          int64_t gidx = co / out_per_group;
          const double* grow = gbatch + co * t_out;
          if (gb) {
            double acc = 0.0;
            for (int64_t t = 0; t < t_out; t++) acc += grow[t];
            gb[co] += acc;
          }
          for (int64_t ci = 0; ci < cpg; ci++) {
            const double* xrow = xb + (gidx * cpg + ci) * t_in;
            const double* wrow = wd + (co * cpg + ci) * k;
            double* gxrow = gxb ? gxb + (gidx * cpg + ci) * t_in : nullptr;
            double* gwrow = gw ? gw + (co * cpg + ci) * k : nullptr;
            for (int64_t kk = 0; kk < k; kk++) {
              int64_t off = kk * dilation - pad_left;
              int64_t t0 = off < 0 ? (-off + stride - 1) / stride : 0;
              int64_t t1 = (t_in - 1 - off) / stride + 1;
              t1 = std::min(t1, t_out);
              if (gxrow) {
                double wv = wrow[kk];
                for (int64_t t = t0; t < t1; t++)
                  gxrow[t * stride + off] += wv * grow[t];
              }
              if (gwrow) {
                double acc = 0.0;
                for (int64_t t = t0; t < t1; t++)
                  acc += grow[t] * xrow[t * stride + off];
                gwrow[kk] += acc;
              }
            }
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
              int64_t stride_h, int64_t stride_w, int64_t pad_h,
              int64_t pad_w) {
  check(stride_h >= 1 && stride_w >= 1 && pad_h >= 0 && pad_w >= 0,
        "conv2d: invalid hyperparameters");
  bool batched = x.rank() == 4;
  check(batched || x.rank() == 3, "conv2d: input must be (C,H,W) or (B,C,H,W)");
  check(w.rank() == 4, "conv2d: weight must be (C_out, C_in, kh, kw)");
  int64_t batch = batched ? x.dim(0) : 1;
  int64_t c_in = x.dim(batched ? 1 : 0);
  int64_t h_in = x.dim(batched ? 2 : 1);
  int64_t w_in = x.dim(batched ? 3 : 2);
  int64_t c_out = w.dim(0);
  check(w.dim(1) == c_in, "conv2d: channel mismatch");
  int64_t kh = w.dim(2), kw = w.dim(3);
  check(h_in + 2 * pad_h >= kh && w_in + 2 * pad_w >= kw,
        "conv2d: kernel does not fit input");
  int64_t h_out = (h_in + 2 * pad_h - kh) / stride_h + 1;
  int64_t w_out = (w_in + 2 * pad_w - kw) / stride_w + 1;
  if (b.defined()) check(b.rank() == 1 && b.dim(0) == c_out, "conv2d: bias");

  Shape out_shape = batched ? Shape{batch, c_out, h_out, w_out}
                            : Shape{c_out, h_out, w_out};
  auto out = new_node(out_shape);
  const double* xd = x.data();
  const double* wd = w.data();
  double* yd = out->value.data();

  for (int64_t bb = 0; bb < batch; bb++) {
    const double* xb = xd + bb * c_in * h_in * w_in;
    double* yb = yd + bb * c_out * h_out * w_out;
    for (int64_t co = 0; co < c_out; co++) {
      double* yplane = yb + co * h_out * w_out;
      if (b.defined()) {
        double bv = b.data()[co];
        for (int64_t i = 0; i < h_out * w_out; i++) yplane[i] = bv;
      }
      for (int64_t ci = 0; ci < c_in; ci++) {
        const double* xplane = xb + ci * h_in * w_in;
        const double* wplane = wd + (co * c_in + ci) * kh * kw;
        for (int64_t ky = 0; ky < kh; ky++) {
          int64_t oy = ky - pad_h;
          for (int64_t kx = 0; kx < kw; kx++) {
            double wv = wplane[ky * kw + kx];
            int64_t ox = kx - pad_w;
            int64_t y0 = oy < 0 ? (-oy + stride_h - 1) / stride_h : 0;
            int64_t y1 = std::min((h_in - 1 - oy) / stride_h + 1, h_out);
            int64_t x0 = ox < 0 ? (-ox + stride_w - 1) / stride_w : 0;
            int64_t x1 = std::min((w_in - 1 - ox) / stride_w + 1, w_out);
            for (int64_t yy = y0; yy < y1; yy++) {
              const double* xr = xplane + (yy * stride_h + oy) * w_in + ox;
              double* yr = yplane + yy * w_out;
              for (int64_t xx = x0; xx < x1; xx++)
                yr[xx] += wv * xr[xx * stride_w];
            }
          }
        }
      }
    }
  }

  if (x.requires_grad() || w.requires_grad() ||
      (b.defined() && b.requires_grad())) {
    out->requires_grad = true;
    out->parents = {x.node(), w.node()};
    if (b.defined()) out->parents.push_back(b.node());
    Node* self = out.get();
    NodePtr xn = x.node(), wn = w.node();
    NodePtr bn = b.defined() ? b.node() : nullptr;
    out->backward_fn = [self, xn, wn, bn, batch, c_in, h_in, w_in, c_out, kh,
                        kw, stride_h, stride_w, pad_h, pad_w, h_out,
                        w_out]() {
      const double* g = self->grad.data();
      const double* xd = xn->value.data();
      const double* wd = wn->value.data();
      double* gx = xn->requires_grad ? xn->ensure_grad() : nullptr;
      double* gw = wn->requires_grad ? wn->ensure_grad() : nullptr;
      double* gb = bn && bn->requires_grad ? bn->ensure_grad() : nullptr;
      for (int64_t bb = 0; bb < batch; bb++) {
        const double* xb = xd + bb * c_in * h_in * w_in;
        const double* gbatch = g + bb * c_out * h_out * w_out;
        double* gxb = gx ? gx + bb * c_in * h_in * w_in : nullptr;
        for (int64_t co = 0; co < c_out; co++) {
          const double* gplane = gbatch + co * h_out * w_out;
          if (gb) {
            double acc = 0.0;
            for (int64_t i = 0; i < h_out * w_out; i++) acc += gplane[i];
            gb[co] += acc;
          }
          for (int64_t ci = 0; ci < c_in; ci++) {
            const double* xplane = xb + ci * h_in * w_in;
            const double* wplane = wd + (co * c_in + ci) * kh * kw;
            double* gxplane = gxb ? gxb + ci * h_in * w_in : nullptr;
            double* gwplane = gw ? gw + (co * c_in + ci) * kh * kw : nullptr;
            for (int64_t ky = 0; ky < kh; ky++) {
              int64_t oy = ky - pad_h;
              for (int64_t kx = 0; kx < kw; kx++) {
                int64_t ox = kx - pad_w;
                int64_t y0 = oy < 0 ? (-oy + stride_h - 1) / stride_h : 0;
                int64_t y1 = std::min((h_in - 1 - oy) / stride_h + 1, h_out);
                int64_t x0 = ox < 0 ? (-ox + stride_w - 1) / stride_w : 0;
                int64_t x1 = std::min((w_in - 1 - ox) / stride_w + 1, w_out);
                double wv = wplane[ky * kw + kx];
                double acc = 0.0;
                for (int64_t yy = y0; yy < y1; yy++) {
                  const double* gr = gplane + yy * w_out;
                  const double* xr = xplane + (yy * stride_h + oy) * w_in + ox;
                  double* gxr =
                      gxplane ? gxplane + (yy * stride_h + oy) * w_in + ox
                              : nullptr;
                  for (int64_t xx = x0; xx < x1; xx++) {
                    double gv = gr[xx];
                    if (gxr) gxr[xx * stride_w] += wv * gv;
                    acc += gv * xr[xx * stride_w];
                  }
                }
                if (gwplane) gwplane[ky * kw + kx] += acc;
              }
            }
          }
        }
      }
    };
  }
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// rotary + attention

Tensor rotary_embed(const Tensor& x, double base) {
  int r = x.rank();
  check(r >= 2, "rotary_embed: rank");
  int64_t d = x.dim(r - 1);
  check(d % 2 == 0, "rotary_embed: feature dimension must be even");
  int64_t p = x.dim(r - 2);
  int64_t outer = x.numel() / (p * d);

  // angle table: theta(pos, i) = pos * base^(-2i/d)
  auto cos_tab = std::make_shared<std::vector<double>>(size_t(p * d / 2));
  auto sin_tab = std::make_shared<std::vector<double>>(size_t(p * d / 2));
  for (int64_t pos = 0; pos < p; pos++) {
    for (int64_t i = 0; i < d / 2; i++) {
      double freq = std::pow(base, -2.0 * double(i) / double(d));
      double th = double(pos) * freq;
      (*cos_tab)[size_t(pos * (d / 2) + i)] = std::cos(th);
      (*sin_tab)[size_t(pos * (d / 2) + i)] = std::sin(th);
    }
  }

  auto out = new_node(x.shape());
  const double* xd = x.data();
  double* yd = out->value.data();
  for (int64_t o = 0; o < outer; o++) {
    for (int64_t pos = 0; pos < p; pos++) {
      const double* xr = xd + (o * p + pos) * d;
      double* yr = yd + (o * p + pos) * d;
      for (int64_t i = 0; i < d / 2; i++) {
        double c = (*cos_tab)[size_t(pos * (d / 2) + i)];
        double s = (*sin_tab)[size_t(pos * (d / 2) + i)];
        double a = xr[2 * i], b = xr[2 * i + 1];
        yr[2 * i] = a * c - b * s;
        yr[2 * i + 1] = a * s + b * c;
      }
    }
  }

  if (x.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node()};
    Node* self = out.get();
    NodePtr xn = x.node();
    out->backward_fn = [self, xn, cos_tab, sin_tab, outer, p, d]() {
      double* gx = xn->ensure_grad();
      const double* g = self->grad.data();
      for (int64_t o = 0; o < outer; o++) {
        for (int64_t pos = 0; pos < p; pos++) {
          const double* gr = g + (o * p + pos) * d;
          double* gxr = gx + (o * p + pos) * d;
          for (int64_t i = 0; i < d / 2; i++) {
            double c = (*cos_tab)[size_t(pos * (d / 2) + i)];
            double s = (*sin_tab)[size_t(pos * (d / 2) + i)];
            double ga = gr[2 * i], gb = gr[2 * i + 1];
            // inverse rotation
            gxr[2 * i] += ga * c + gb * s;
            gxr[2 * i + 1] += -ga * s + gb * c;
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor multi_head_attention(const Tensor& x, const AttentionParams& p,
                            int64_t n_heads, bool causal_mask,
                            double rotary_base) {
  bool batched = x.rank() == 3;
  check(batched || x.rank() == 2, "attention: input must be (P,N) or (B,P,N)");
  int64_t batch = batched ? x.dim(0) : 1;
  int64_t pos = x.dim(batched ? 1 : 0);
  int64_t n = x.dim(batched ? 2 : 1);
  check(n % n_heads == 0, "attention: N must be divisible by n_heads");
  int64_t d = n / n_heads;
  check(d % 2 == 0, "attention: head dimension must be even for rotary");

  Tensor x3 = batched ? x : ag::reshape(x, {1, pos, n});
  auto project = [&](const Tensor& w, const Tensor& b) {
    return add_rowvec(ag::matmul(x3, w), b);  // (B,P,N)
  };
  auto to_heads = [&](const Tensor& t) {
    // (B,P,N) -> (B*h, P, d)
    Tensor r = ag::reshape(t, {batch, pos, n_heads, d});
    r = ag::permute(r, {0, 2, 1, 3});
    return ag::reshape(r, {batch * n_heads, pos, d});
  };

  Tensor q = to_heads(project(p.wq, p.bq));
  Tensor k = to_heads(project(p.wk, p.bk));
  Tensor v = to_heads(project(p.wv, p.bv));
  q = rotary_embed(q, rotary_base);
  k = rotary_embed(k, rotary_base);

  Tensor scores = ag::matmul(q, ag::transpose_last2(k));
  scores = ag::mul_scalar(scores, 1.0 / std::sqrt(double(d)));
  Tensor att = softmax(scores, causal_mask);
  Tensor ctx = ag::matmul(att, v);  // (B*h, P, d)

  ctx = ag::reshape(ctx, {batch, n_heads, pos, d});
  ctx = ag::permute(ctx, {0, 2, 1, 3});
  ctx = ag::reshape(ctx, {batch, pos, n});
  Tensor out = add_rowvec(ag::matmul(ctx, p.wo), p.bo);
  return batched ? out : ag::reshape(out, {pos, n});
}

// ---------------------------------------------------------------------------
// spectral normalization

Tensor spectral_norm_apply(const Tensor& w, Tensor& u, bool training) {
  check(w.rank() >= 2, "spectral_norm: weight must have rank >= 2");
  int64_t rows = w.dim(0);
  int64_t cols = w.numel() / rows;
  check(u.defined() && u.numel() == rows, "spectral_norm: u length mismatch");

  const double* wd = w.data();
  double* ud = u.data();

  // v = normalize(W^T u); optionally one u update (outside the graph)
  std::vector<double> v(static_cast<size_t>(cols), 0.0);
  auto compute_v = [&]() {
    std::fill(v.begin(), v.end(), 0.0);
    for (int64_t i = 0; i < rows; i++) {
      double uv = ud[i];
      const double* wrow = wd + i * cols;
      for (int64_t j = 0; j < cols; j++) v[size_t(j)] += uv * wrow[j];
    }
    double nrm = 0.0;
    for (double q : v) nrm += q * q;
    nrm = std::sqrt(nrm) + 1e-12;
    for (double& q : v) q /= nrm;
  };
  compute_v();
  if (training) {
    std::vector<double> nu(static_cast<size_t>(rows), 0.0);
    for (int64_t i = 0; i < rows; i++) {
      const double* wrow = wd + i * cols;
      double acc = 0.0;
      for (int64_t j = 0; j < cols; j++) acc += wrow[j] * v[size_t(j)];
      nu[size_t(i)] = acc;
    }
    double nrm = 0.0;
    for (double q : nu) nrm += q * q;
    nrm = std::sqrt(nrm) + 1e-12;
    for (int64_t i = 0; i < rows; i++) ud[i] = nu[size_t(i)] / nrm;
    compute_v();
  }

  // sigma = u^T W v with u, v held constant; gradients flow through W
  Tensor u_c = Tensor::from_data({1, rows}, std::vector<double>(ud, ud + rows));
  Tensor v_c = Tensor::from_data({cols, 1}, std::vector<double>(v));
  Tensor w2 = ag::reshape(w, {rows, cols});
  Tensor sigma = ag::reshape(ag::matmul(ag::matmul(u_c, w2), v_c), {1});
  sigma = ag::add_scalar(sigma, 1e-12);
  return ag::div_by_scalar_tensor(w, sigma);
}

}  // namespace apollo::nn
