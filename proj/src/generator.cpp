// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/generator.hpp"

#include <algorithm>
#include <cmath>

#include "apollo/fft.hpp"

namespace apollo::gen {

using ag::Shape;
using dsp::cplx;

void GeneratorConfig::validate() const {
  stft.validate();
  check(feature_dim > 0, "feature_dim must be positive");
  check(depth >= 1, "depth must be >= 1");
  check(attention.heads >= 1 && feature_dim % attention.heads == 0,
        "feature_dim must be divisible by attention heads");
  check((feature_dim / attention.heads) % 2 == 0,
        "head dimension must be even");
  check(attention.ffn_mult >= 1, "ffn_mult must be >= 1");
  check(tcn.blocks >= 1 && tcn.kernel >= 1 && tcn.hidden_mult >= 1,
        "invalid TCN config");
  check(tcn.layers_per_block == 3,
        "TCN blocks are in-projection / depthwise / out-projection");
  check(int64_t(tcn.dilations.size()) == tcn.blocks,
        "tcn.dilations must list one dilation per block");
  check(bandwidth_hz >= stft.bin_spacing_hz(), "bandwidth below bin spacing");
  check(eps_mag > 0, "eps_mag must be positive");
}

Tensor gain_shape(std::span<const cplx> band, int64_t m, int64_t t,
                  double eps_mag) {
  check(int64_t(band.size()) == m * t, "gain_shape: size mismatch");
  std::vector<double> out(static_cast<size_t>(3 * m * t));
  for (int64_t i = 0; i < m * t; i++) {
    double re = band[size_t(i)].real();
    double im = band[size_t(i)].imag();
    check(std::isfinite(re) && std::isfinite(im), "gain_shape: non-finite bin");
    double mag = std::sqrt(re * re + im * im);
    if (mag > 0.0) {
      out[size_t(i)] = re / mag;
      out[size_t(m * t + i)] = im / mag;
    } else {
      out[size_t(i)] = 0.0;
      out[size_t(m * t + i)] = 0.0;
    }
    out[size_t(2 * m * t + i)] = std::log(std::max(mag, eps_mag));
  }
  return Tensor::from_data({3, m, t}, std::move(out));
}

Generator::Generator(GeneratorConfig cfg, nn::ParameterStore* store,
                     std::string prefix)
    : cfg_(std::move(cfg)), store_(store), prefix_(std::move(prefix)) {
  cfg_.validate();
  plan_ = dsp::make_band_plan(cfg_.stft, cfg_.bandwidth_hz);
}

Generator Generator::create(const GeneratorConfig& cfg,
                            nn::ParameterStore& store, Rng& rng,
                            const std::string& prefix) {
  Generator g(cfg, &store, prefix);
  g.build(&rng);
  return g;
}

Generator Generator::attach(const GeneratorConfig& cfg,
                            nn::ParameterStore& store,
                            const std::string& prefix) {
  Generator g(cfg, &store, prefix);
  g.build(nullptr);
  return g;
}

void Generator::build(Rng* rng) {
  const int64_t n = cfg_.feature_dim;
  const int64_t hidden = cfg_.tcn.hidden_mult * n;
  const int64_t ffn = cfg_.attention.ffn_mult * n;

  auto param = [&](const std::string& name, const Shape& shape,
                   double fan_in) -> Tensor {
    std::string full = prefix_ + name;
    if (rng) {
      double a = fan_in > 0 ? std::sqrt(1.0 / fan_in) : 0.0;
      Tensor t = fan_in > 0 ? Tensor::uniform(shape, *rng, -a, a)
                            : Tensor::zeros(shape);
      return store_->create(full, std::move(t));
    }
    Tensor t = store_->get(full);
    check(t.shape() == shape, "checkpoint shape mismatch for " + full);
    return t;
  };
  auto ones_param = [&](const std::string& name, int64_t len) -> Tensor {
    std::string full = prefix_ + name;
    if (rng) return store_->create(full, Tensor::full({len}, 1.0));
    Tensor t = store_->get(full);
    check(t.shape() == Shape{len}, "checkpoint shape mismatch for " + full);
    return t;
  };

  bands_.clear();
  for (int64_t k = 0; k < plan_.n_bands(); k++) {
    int64_t m = plan_.bins_per_band[size_t(k)];
    std::string base = "enc/band" + std::to_string(k) + "/";
    BandIO io;
    io.enc_norm = ones_param(base + "norm", 3 * m);
    io.enc_w = param(base + "w", {n, 3 * m, 1}, double(3 * m));
    io.enc_b = param(base + "b", {n}, 0);
    std::string dbase = "dec/band" + std::to_string(k) + "/";
    io.dec_norm = ones_param(dbase + "norm", n);
    io.dec_w = param(dbase + "w", {4 * m, n, 1}, double(n));
    io.dec_b = param(dbase + "b", {4 * m}, 0);
    bands_.push_back(std::move(io));
  }

  modules_.clear();
  for (int64_t b = 0; b < cfg_.depth; b++) {
    std::string base = "bs" + std::to_string(b) + "/";
    BsParams mp;
    mp.attn_norm = ones_param(base + "attn/norm", n);
    mp.attn.wq = param(base + "attn/wq", {n, n}, double(n));
    mp.attn.bq = param(base + "attn/bq", {n}, 0);
    mp.attn.wk = param(base + "attn/wk", {n, n}, double(n));
    mp.attn.bk = param(base + "attn/bk", {n}, 0);
    mp.attn.wv = param(base + "attn/wv", {n, n}, double(n));
    mp.attn.bv = param(base + "attn/bv", {n}, 0);
    mp.attn.wo = param(base + "attn/wo", {n, n}, double(n));
    mp.attn.bo = param(base + "attn/bo", {n}, 0);
    mp.ffn_norm = ones_param(base + "ffn/norm", n);
    mp.ffn_w1 = param(base + "ffn/w1", {n, ffn}, double(n));
    mp.ffn_b1 = param(base + "ffn/b1", {ffn}, 0);
    mp.ffn_w2 = param(base + "ffn/w2", {ffn, n}, double(ffn));
    mp.ffn_b2 = param(base + "ffn/b2", {n}, 0);
    for (int64_t j = 0; j < cfg_.tcn.blocks; j++) {
      std::string tb = base + "tcn" + std::to_string(j) + "/";
      TcnBlockParams tp;
      tp.norm_gain = ones_param(tb + "norm", n);
      tp.in_w = param(tb + "in_w", {hidden, n, 1}, double(n));
      tp.in_b = param(tb + "in_b", {hidden}, 0);
      tp.dw_w = param(tb + "dw_w", {hidden, 1, cfg_.tcn.kernel},
                      double(cfg_.tcn.kernel));
      tp.dw_b = param(tb + "dw_b", {hidden}, 0);
      tp.out_w = param(tb + "out_w", {n, hidden, 1}, double(hidden));
      tp.out_b = param(tb + "out_b", {n}, 0);
      mp.tcn.push_back(std::move(tp));
    }
    modules_.push_back(std::move(mp));
  }
}

int64_t Generator::param_count() const { return store_->param_count(prefix_); }

void Generator::set_trainable(bool trainable) {
  for (const auto& name : store_->names())
    if (name.rfind(prefix_, 0) == 0)
      store_->get(name).set_requires_grad(trainable);
}

Tensor Generator::band_encode(const std::vector<Tensor>& gain_shapes) const {
  check(int64_t(gain_shapes.size()) == plan_.n_bands(),
        "band_encode: band count mismatch");
  std::vector<Tensor> cols;
  cols.reserve(gain_shapes.size());
  int64_t t = gain_shapes[0].dim(2);
  for (int64_t k = 0; k < plan_.n_bands(); k++) {
    const Tensor& g = gain_shapes[size_t(k)];
    int64_t m = plan_.bins_per_band[size_t(k)];
    check(g.rank() == 3 && g.dim(0) == 3 && g.dim(1) == m && g.dim(2) == t,
          "band_encode: gain-shape " + std::to_string(k) + " has wrong shape");
    Tensor x = ag::reshape(g, {3 * m, t});
    x = nn::rms_norm(x, bands_[size_t(k)].enc_norm, 0);
    x = nn::conv1d(x, bands_[size_t(k)].enc_w, bands_[size_t(k)].enc_b, 1, 1,
                   nn::PadMode::same);
    cols.push_back(ag::reshape(x, {1, cfg_.feature_dim, t}));
  }
  return ag::concat(cols, 0);  // (K, N, T)
}

Tensor Generator::bs_module(const Tensor& z, int64_t module_index,
                            bool causal) const {
  check(module_index >= 0 && module_index < int64_t(modules_.size()),
        "bs_module: bad index");
  const BsParams& p = modules_[size_t(module_index)];
  check(z.rank() == 3 && z.dim(0) == plan_.n_bands() &&
            z.dim(1) == cfg_.feature_dim,
        "bs_module: embeddings shape mismatch");

  // band attention, frame by frame
  Tensor zp = ag::permute(z, {2, 0, 1});  // (T, K, N)
  Tensor h = nn::rms_norm(zp, p.attn_norm, 2);
  h = nn::multi_head_attention(h, p.attn, cfg_.attention.heads, false);
  zp = ag::add(zp, h);
  h = nn::rms_norm(zp, p.ffn_norm, 2);
  h = nn::add_rowvec(ag::matmul(h, p.ffn_w1), p.ffn_b1);
  h = nn::gelu(h);
  h = nn::add_rowvec(ag::matmul(h, p.ffn_w2), p.ffn_b2);
  zp = ag::add(zp, h);
  Tensor zt = ag::permute(zp, {1, 2, 0});  // (K, N, T)

  // shared TCN over time
  nn::PadMode mode = causal ? nn::PadMode::causal : nn::PadMode::same;
  for (int64_t j = 0; j < cfg_.tcn.blocks; j++) {
    const TcnBlockParams& tp = p.tcn[size_t(j)];
    Tensor hb = nn::rms_norm(zt, tp.norm_gain, 1);
    hb = nn::conv1d(hb, tp.in_w, tp.in_b, 1, 1, nn::PadMode::same);
    hb = nn::gelu(hb);
    hb = nn::conv1d(hb, tp.dw_w, tp.dw_b, 1, cfg_.tcn.dilations[size_t(j)],
                    mode, cfg_.tcn.hidden_mult * cfg_.feature_dim);
    hb = nn::gelu(hb);
    hb = nn::conv1d(hb, tp.out_w, tp.out_b, 1, 1, nn::PadMode::same);
    zt = ag::add(zt, hb);
  }
  return zt;
}

Tensor Generator::band_decode(const Tensor& q) const {
  check(q.rank() == 3 && q.dim(0) == plan_.n_bands() &&
            q.dim(1) == cfg_.feature_dim,
        "band_decode: embeddings shape mismatch");
  int64_t t = q.dim(2);
  std::vector<Tensor> parts;
  parts.reserve(size_t(plan_.n_bands()));
  for (int64_t k = 0; k < plan_.n_bands(); k++) {
    int64_t m = plan_.bins_per_band[size_t(k)];
    const BandIO& io = bands_[size_t(k)];
    Tensor x = ag::reshape(ag::slice(q, 0, k, k + 1), {cfg_.feature_dim, t});
    x = nn::rms_norm(x, io.dec_norm, 0);
    x = nn::conv1d(x, io.dec_w, io.dec_b, 1, 1, nn::PadMode::same);
    x = nn::glu(x, 0);  // (2M, T)
    Tensor re = ag::reshape(ag::slice(x, 0, 0, m), {1, m, t});
    Tensor im = ag::reshape(ag::slice(x, 0, m, 2 * m), {1, m, t});
    parts.push_back(ag::concat({re, im}, 0));  // (2, M, T)
  }
  return ag::concat(parts, 1);  // (2, F, T)
}

Tensor Generator::forward_t(std::span<const double> wave) const {
  auto spec = dsp::stft(wave, cfg_.stft);
  auto bands = dsp::split_bands(spec, plan_);
  std::vector<Tensor> gs;
  gs.reserve(bands.size());
  for (int64_t k = 0; k < plan_.n_bands(); k++)
    gs.push_back(gain_shape(bands[size_t(k)], plan_.bins_per_band[size_t(k)],
                            spec.n_frames, cfg_.eps_mag));
  Tensor z = band_encode(gs);
  for (int64_t b = 0; b < cfg_.depth; b++) z = bs_module(z, b, cfg_.causal);
  Tensor y = band_decode(z);
  return sig::istft_op(y, cfg_.stft, int64_t(wave.size()));
}

std::vector<double> Generator::forward(std::span<const double> wave) const {
  return forward_t(wave).values();
}

StreamingSession Generator::open_stream() const {
  check(cfg_.causal, "streaming requires a causal generator config");
  return StreamingSession(*this);
}

// ---------------------------------------------------------------------------
// streaming

StreamingSession::StreamingSession(const Generator& g) : gen_(g) { reset(); }

void StreamingSession::reset() {
  input_.clear();
  acc_.clear();
  env_.clear();
  acc_base_ = 0;
  next_frame_ = 0;
  emitted_ = 0;
  flushed_ = false;
  const auto& cfg = gen_.cfg_;
  int64_t k = gen_.plan_.n_bands();
  int64_t hidden = cfg.tcn.hidden_mult * cfg.feature_dim;
  ctx_.assign(size_t(cfg.depth * cfg.tcn.blocks), {});
  for (int64_t b = 0; b < cfg.depth; b++) {
    for (int64_t j = 0; j < cfg.tcn.blocks; j++) {
      int64_t span = (cfg.tcn.kernel - 1) * cfg.tcn.dilations[size_t(j)];
      ctx_[size_t(b * cfg.tcn.blocks + j)].assign(
          size_t(k), std::vector<double>(size_t(hidden * span), 0.0));
    }
  }
}

std::vector<double> StreamingSession::push(std::span<const double> chunk) {
  check(!flushed_, "push after flush; call reset first");
  input_.insert(input_.end(), chunk.begin(), chunk.end());
  return process_ready(false);
}

std::vector<double> StreamingSession::flush() {
  if (flushed_) return {};
  flushed_ = true;
  if (input_.empty()) return {};
  check(int64_t(input_.size()) >= gen_.cfg_.stft.window_len,
        "stream shorter than one window");
  return process_ready(true);
}

std::vector<double> StreamingSession::process_ready(bool flushing) {
  const auto& cfg = gen_.cfg_.stft;
  const int64_t w = cfg.window_len;
  const int64_t hop = cfg.hop_len;
  const int64_t p = cfg.pad();
  const int64_t len = int64_t(input_.size());

  auto padded_at = [&](int64_t i) -> double {
    if (i < p) return input_[size_t(p - i)];
    i -= p;
    if (i < len) return input_[size_t(i)];
    return input_[size_t(len - 2 - (i - len))];  // right reflect (flush only)
  };

  int64_t max_frame;
  if (flushing) {
    max_frame = (len + 2 * p - w) / hop;  // inclusive, == T-1
  } else {
    // frame m needs padded samples up to m*hop + w <= p + len
    max_frame = (p + len - w) / hop;
    if (p + len < w) max_frame = -1;
  }

  std::vector<double> frame(static_cast<size_t>(w));
  for (; next_frame_ <= max_frame; next_frame_++) {
    for (int64_t n = 0; n < w; n++)
      frame[size_t(n)] = padded_at(next_frame_ * hop + n);
    run_frame(frame);
  }

  // samples strictly before next_frame_*hop (padded coords) are final
  int64_t final_end = flushing ? len : next_frame_ * hop - p;
  final_end = std::min(final_end, len);
  std::vector<double> out;
  for (; emitted_ < final_end; emitted_++) {
    int64_t pi = p + emitted_ - acc_base_;
    double e = env_[size_t(pi)];
    out.push_back(e > 1e-12 ? acc_[size_t(pi)] / e : 0.0);
  }
  return out;
}

void StreamingSession::run_frame(std::span<const double> padded_frame) {
  const auto& gcfg = gen_.cfg_;
  const auto& cfg = gcfg.stft;
  const auto& plan = gen_.plan_;
  const int64_t w = cfg.window_len;
  const int64_t fft_len = cfg.fft_len;
  const int64_t f = cfg.n_bins();
  const int64_t n = gcfg.feature_dim;
  const int64_t k_bands = plan.n_bands();
  const int64_t heads = gcfg.attention.heads;
  const int64_t dhead = n / heads;
  const int64_t ffn = gcfg.attention.ffn_mult * n;
  const int64_t hidden = gcfg.tcn.hidden_mult * n;
  const int64_t ker = gcfg.tcn.kernel;
  const double eps = 1e-8;

  auto window = dsp::make_window(cfg.window, w);
  std::vector<double> buf(static_cast<size_t>(fft_len), 0.0);
  for (int64_t i = 0; i < w; i++) buf[size_t(i)] = padded_frame[size_t(i)] * window[size_t(i)];
  auto spec = fft::rfft(buf);

  // encode: per band gain-shape -> rms-norm -> 1x1 conv
  std::vector<double> z(static_cast<size_t>(k_bands * n));
  std::vector<double> gsv;
  for (int64_t k = 0; k < k_bands; k++) {
    auto [start, end] = plan.band_edges[size_t(k)];
    int64_t m = end - start;
    gsv.assign(size_t(3 * m), 0.0);
    for (int64_t i = 0; i < m; i++) {
      double re = spec[size_t(start + i)].real();
      double im = spec[size_t(start + i)].imag();
      double mag = std::sqrt(re * re + im * im);
      if (mag > 0.0) {
        gsv[size_t(i)] = re / mag;
        gsv[size_t(m + i)] = im / mag;
      }
      gsv[size_t(2 * m + i)] = std::log(std::max(mag, gcfg.eps_mag));
    }
    const Generator::BandIO& io = gen_.bands_[size_t(k)];
    double ss = 0.0;
    for (int64_t i = 0; i < 3 * m; i++) ss += gsv[size_t(i)] * gsv[size_t(i)];
    double inv = 1.0 / std::sqrt(ss / double(3 * m) + eps);
    const double* gain = io.enc_norm.data();
    for (int64_t i = 0; i < 3 * m; i++) gsv[size_t(i)] = gain[i] * gsv[size_t(i)] * inv;
    const double* wm = io.enc_w.data();
    const double* bm = io.enc_b.data();
    for (int64_t o = 0; o < n; o++) {
      double acc = bm[o];
      for (int64_t i = 0; i < 3 * m; i++) acc += wm[o * 3 * m + i] * gsv[size_t(i)];
      z[size_t(k * n + o)] = acc;
    }
  }

  auto rms_rows = [&](std::vector<double>& x, const double* gain,
                      int64_t rows, int64_t width) {
    for (int64_t r = 0; r < rows; r++) {
      double* xr = x.data() + r * width;
      double ss = 0.0;
      for (int64_t i = 0; i < width; i++) ss += xr[i] * xr[i];
      double inv = 1.0 / std::sqrt(ss / double(width) + eps);
      for (int64_t i = 0; i < width; i++) xr[i] = gain[i] * xr[i] * inv;
    }
  };
  auto gelu_v = [](double v) {
    return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  };

  std::vector<double> hq(static_cast<size_t>(k_bands * n)), hk(static_cast<size_t>(k_bands * n)),
      hv(static_cast<size_t>(k_bands * n)), hn(static_cast<size_t>(k_bands * n)),
      hctx(static_cast<size_t>(k_bands * n)), hffn(static_cast<size_t>(k_bands * ffn)),
      scores(static_cast<size_t>(k_bands)), h1(static_cast<size_t>(k_bands * hidden)),
      hdw(static_cast<size_t>(k_bands * hidden));

  for (int64_t b = 0; b < gcfg.depth; b++) {
    const auto& mp = gen_.modules_[size_t(b)];
    // --- band attention (single frame) ---
    hn.assign(z.begin(), z.end());
    rms_rows(hn, mp.attn_norm.data(), k_bands, n);
    // mirrors add_rowvec(matmul(x, w), b): bias applied after the product
    auto project = [&](const Tensor& wt, const Tensor& bt,
                       std::vector<double>& dst) {
      const double* wm = wt.data();
      const double* bm = bt.data();
      for (int64_t kk = 0; kk < k_bands; kk++) {
        double* dr = dst.data() + kk * n;
        const double* xr = hn.data() + kk * n;
        for (int64_t o = 0; o < n; o++) dr[o] = 0.0;
        for (int64_t i = 0; i < n; i++) {
          double xv = xr[i];
          if (xv == 0.0) continue;
          const double* wr = wm + i * n;
          for (int64_t o = 0; o < n; o++) dr[o] += xv * wr[o];
        }
        for (int64_t o = 0; o < n; o++) dr[o] += bm[o];
      }
    };
    project(mp.attn.wq, mp.attn.bq, hq);
    project(mp.attn.wk, mp.attn.bk, hk);
    project(mp.attn.wv, mp.attn.bv, hv);
    // rotary on q, k: position = band index
    for (int64_t kk = 0; kk < k_bands; kk++) {
      for (int64_t h = 0; h < heads; h++) {
        double* qr = hq.data() + kk * n + h * dhead;
        double* kr = hk.data() + kk * n + h * dhead;
        for (int64_t i = 0; i < dhead / 2; i++) {
          double freq = std::pow(10000.0, -2.0 * double(i) / double(dhead));
          double th = double(kk) * freq;
          double c = std::cos(th), s = std::sin(th);
          double a0 = qr[2 * i], a1 = qr[2 * i + 1];
          qr[2 * i] = a0 * c - a1 * s;
          qr[2 * i + 1] = a0 * s + a1 * c;
          a0 = kr[2 * i];
          a1 = kr[2 * i + 1];
          kr[2 * i] = a0 * c - a1 * s;
          kr[2 * i + 1] = a0 * s + a1 * c;
        }
      }
    }
    double scale = 1.0 / std::sqrt(double(dhead));
    for (int64_t h = 0; h < heads; h++) {
      for (int64_t qi = 0; qi < k_bands; qi++) {
        const double* qr = hq.data() + qi * n + h * dhead;
        for (int64_t kj = 0; kj < k_bands; kj++) {
          const double* kr = hk.data() + kj * n + h * dhead;
          double acc = 0.0;
          for (int64_t i = 0; i < dhead; i++) acc += qr[i] * kr[i];
          scores[size_t(kj)] = acc * scale;
        }
        double mx = -1e300;
        for (int64_t kj = 0; kj < k_bands; kj++) mx = std::max(mx, scores[size_t(kj)]);
        double sum = 0.0;
        for (int64_t kj = 0; kj < k_bands; kj++) {
          scores[size_t(kj)] = std::exp(scores[size_t(kj)] - mx);
          sum += scores[size_t(kj)];
        }
        double invs = 1.0 / sum;
        for (int64_t kj = 0; kj < k_bands; kj++) scores[size_t(kj)] *= invs;
        double* cr = hctx.data() + qi * n + h * dhead;
        for (int64_t i = 0; i < dhead; i++) cr[i] = 0.0;
        for (int64_t kj = 0; kj < k_bands; kj++) {
          double av = scores[size_t(kj)];
          if (av == 0.0) continue;
          const double* vr = hv.data() + kj * n + h * dhead;
          for (int64_t i = 0; i < dhead; i++) cr[i] += av * vr[i];
        }
      }
    }
    {
      const double* wm = mp.attn.wo.data();
      const double* bm = mp.attn.bo.data();
      for (int64_t kk = 0; kk < k_bands; kk++) {
        const double* xr = hctx.data() + kk * n;
        double* zr = z.data() + kk * n;
        hn.assign(size_t(n), 0.0);
        for (int64_t i = 0; i < n; i++) {
          double xv = xr[i];
          if (xv == 0.0) continue;
          const double* wr = wm + i * n;
          for (int64_t o = 0; o < n; o++) hn[size_t(o)] += xv * wr[o];
        }
        for (int64_t o = 0; o < n; o++) zr[o] += hn[size_t(o)] + bm[o];
      }
    }
    // --- FFN ---
    hn.assign(z.begin(), z.end());
    rms_rows(hn, mp.ffn_norm.data(), k_bands, n);
    {
      const double* w1 = mp.ffn_w1.data();
      const double* b1 = mp.ffn_b1.data();
      const double* w2 = mp.ffn_w2.data();
      const double* b2 = mp.ffn_b2.data();
      for (int64_t kk = 0; kk < k_bands; kk++) {
        double* fr = hffn.data() + kk * ffn;
        const double* xr = hn.data() + kk * n;
        for (int64_t o = 0; o < ffn; o++) fr[o] = 0.0;
        for (int64_t i = 0; i < n; i++) {
          double xv = xr[i];
          if (xv == 0.0) continue;
          const double* wr = w1 + i * ffn;
          for (int64_t o = 0; o < ffn; o++) fr[o] += xv * wr[o];
        }
        for (int64_t o = 0; o < ffn; o++) fr[o] = gelu_v(fr[o] + b1[o]);
        double* zr = z.data() + kk * n;
        std::vector<double> outv(static_cast<size_t>(n), 0.0);
        for (int64_t i = 0; i < ffn; i++) {
          double xv = fr[i];
          if (xv == 0.0) continue;
          const double* wr = w2 + i * n;
          for (int64_t o = 0; o < n; o++) outv[size_t(o)] += xv * wr[o];
        }
        for (int64_t o = 0; o < n; o++) zr[o] += outv[size_t(o)] + b2[o];
      }
    }
    // --- TCN blocks (causal, with streaming context) ---
    for (int64_t j = 0; j < gcfg.tcn.blocks; j++) {
      const auto& tp = mp.tcn[size_t(j)];
      int64_t dil = gcfg.tcn.dilations[size_t(j)];
      int64_t span = (ker - 1) * dil;
      auto& blk_ctx = ctx_[size_t(b * gcfg.tcn.blocks + j)];
      hn.assign(z.begin(), z.end());
      rms_rows(hn, tp.norm_gain.data(), k_bands, n);
      const double* in_w = tp.in_w.data();
      const double* in_b = tp.in_b.data();
      const double* dw_w = tp.dw_w.data();
      const double* dw_b = tp.dw_b.data();
      const double* out_w = tp.out_w.data();
      const double* out_b = tp.out_b.data();
      for (int64_t kk = 0; kk < k_bands; kk++) {
        const double* xr = hn.data() + kk * n;
        double* h1r = h1.data() + kk * hidden;
        for (int64_t o = 0; o < hidden; o++) h1r[o] = in_b[o];
        for (int64_t i = 0; i < n; i++) {
          double xv = xr[i];
          if (xv == 0.0) continue;
          const double* wr = in_w + 0;  // (hidden, n, 1) laid out [o][i]
          for (int64_t o = 0; o < hidden; o++) h1r[o] += wr[o * n + i] * xv;
        }
        for (int64_t o = 0; o < hidden; o++) h1r[o] = gelu_v(h1r[o]);
        // depthwise causal conv: taps kk2 < ker-1 read the context buffer
        std::vector<double>& cbuf = blk_ctx[size_t(kk)];
        double* dwr = hdw.data() + kk * hidden;
        for (int64_t c = 0; c < hidden; c++) {
          double acc = dw_b[c];
          for (int64_t kk2 = 0; kk2 < ker; kk2++) {
            double wv = dw_w[c * ker + kk2];
            double xv;
            if (kk2 == ker - 1) {
              xv = h1r[c];
            } else {
              int64_t idx = kk2 * dil;  // column idx within [0, span)
              xv = span > 0 ? cbuf[size_t(c * span + idx)] : h1r[c];
            }
            acc += wv * xv;
          }
          dwr[c] = gelu_v(acc);
        }
        // shift context left one column, append current h1
        if (span > 0) {
          for (int64_t c = 0; c < hidden; c++) {
            double* row = cbuf.data() + c * span;
            for (int64_t i = 0; i + 1 < span; i++) row[i] = row[i + 1];
            row[span - 1] = h1r[c];
          }
        }
        double* zr = z.data() + kk * n;
        std::vector<double> outv(static_cast<size_t>(n));
        for (int64_t o = 0; o < n; o++) outv[size_t(o)] = out_b[o];
        for (int64_t i = 0; i < hidden; i++) {
          double xv = dwr[i];
          if (xv == 0.0) continue;
          const double* wr = out_w + 0;
          for (int64_t o = 0; o < n; o++) outv[size_t(o)] += wr[o * hidden + i] * xv;
        }
        for (int64_t o = 0; o < n; o++) zr[o] += outv[size_t(o)];
      }
    }
  }

  // decode: per band norm -> 1x1 conv -> GLU -> (re, im)
  std::vector<cplx> ycol(static_cast<size_t>(f));
  std::vector<double> dv;
  for (int64_t kk = 0; kk < k_bands; kk++) {
    auto [start, end] = plan.band_edges[size_t(kk)];
    int64_t m = end - start;
    const Generator::BandIO& io = gen_.bands_[size_t(kk)];
    hn.assign(z.begin() + kk * n, z.begin() + (kk + 1) * n);
    rms_rows(hn, io.dec_norm.data(), 1, n);
    const double* wm = io.dec_w.data();
    const double* bm = io.dec_b.data();
    dv.assign(size_t(4 * m), 0.0);
    for (int64_t o = 0; o < 4 * m; o++) {
      double acc = bm[o];
      for (int64_t i = 0; i < n; i++) acc += wm[o * n + i] * hn[size_t(i)];
      dv[size_t(o)] = acc;
    }
    for (int64_t i = 0; i < m; i++) {
      double re = dv[size_t(i)] * (1.0 / (1.0 + std::exp(-dv[size_t(2 * m + i)])));
      double im = dv[size_t(m + i)] * (1.0 / (1.0 + std::exp(-dv[size_t(3 * m + i)])));
      ycol[size_t(start + i)] = cplx(re, im);
    }
  }

  // overlap-add this frame
  auto frame_sig = fft::irfft(ycol, fft_len);
  int64_t base = next_frame_ * cfg.hop_len;
  int64_t need = base + w - acc_base_;
  if (int64_t(acc_.size()) < need) {
    acc_.resize(size_t(need), 0.0);
    env_.resize(size_t(need), 0.0);
  }
  for (int64_t i = 0; i < w; i++) {
    acc_[size_t(base - acc_base_ + i)] += frame_sig[size_t(i)] * window[size_t(i)];
    env_[size_t(i + base - acc_base_)] += window[size_t(i)] * window[size_t(i)];
  }
}

}  // namespace apollo::gen
