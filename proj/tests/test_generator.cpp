// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "apollo/generator.hpp"
#include "testutil.hpp"

using namespace apollo;
using ag::Tensor;

namespace {

gen::GeneratorConfig tiny_cfg(int64_t n = 8, int64_t depth = 1,
                              double bandwidth = 4000.0) {
  gen::GeneratorConfig c;
  c.bandwidth_hz = bandwidth;
  c.feature_dim = n;
  c.depth = depth;
  c.attention.heads = 2;
  c.attention.ffn_mult = 2;
  c.tcn.hidden_mult = 2;
  return c;
}

}  // namespace

TEST_CASE("gain-shape of reference bins") {
  using dsp::cplx;
  std::vector<cplx> band = {cplx(1, 0), cplx(3, 4), cplx(0, 0)};
  Tensor g = gen::gain_shape(band, 3, 1);
  // bin 1+0j -> (1, 0, 0)
  CHECK(g.data()[0] == doctest::Approx(1.0));
  CHECK(g.data()[3] == doctest::Approx(0.0));
  CHECK(g.data()[6] == doctest::Approx(0.0));
  // bin 3+4j -> (0.6, 0.8, ln 5)
  CHECK(g.data()[1] == doctest::Approx(0.6));
  CHECK(g.data()[4] == doctest::Approx(0.8));
  CHECK(g.data()[7] == doctest::Approx(std::log(5.0)).epsilon(1e-9));
  CHECK(g.data()[7] == doctest::Approx(1.60944).epsilon(1e-5));
  // zero bin -> (0, 0, log 1e-8)
  CHECK(g.data()[2] == 0.0);
  CHECK(g.data()[5] == 0.0);
  CHECK(g.data()[8] == doctest::Approx(std::log(1e-8)).epsilon(1e-9));
  CHECK(g.data()[8] == doctest::Approx(-18.4207).epsilon(1e-4));
}

TEST_CASE("band_encode: zero input yields per-band bias columns") {
  Rng rng(1);
  nn::ParameterStore store;
  auto cfg = tiny_cfg();
  auto g = gen::Generator::create(cfg, store, rng);
  int64_t t = 3;
  std::vector<Tensor> gs;
  for (int64_t k = 0; k < g.band_plan().n_bands(); k++)
    gs.push_back(Tensor::zeros({3, g.band_plan().bins_per_band[size_t(k)], t}));
  Tensor z = g.band_encode(gs);
  REQUIRE(z.shape() ==
          ag::Shape({g.band_plan().n_bands(), cfg.feature_dim, t}));
  for (int64_t k = 0; k < g.band_plan().n_bands(); k++) {
    const Tensor& bias = store.get("gen/enc/band" + std::to_string(k) + "/b");
    for (int64_t o = 0; o < cfg.feature_dim; o++)
      for (int64_t tt = 0; tt < t; tt++)
        CHECK(z.data()[(k * cfg.feature_dim + o) * t + tt] ==
              doctest::Approx(bias.data()[o]));
  }
}

TEST_CASE("band_encode is framewise: identical columns map identically") {
  Rng rng(2);
  nn::ParameterStore store;
  auto cfg = tiny_cfg();
  auto g = gen::Generator::create(cfg, store, rng);
  int64_t t = 2;
  std::vector<Tensor> gs;
  for (int64_t k = 0; k < g.band_plan().n_bands(); k++) {
    int64_t m = g.band_plan().bins_per_band[size_t(k)];
    Tensor one = Tensor::randn({3, m, 1}, rng);
    std::vector<double> rep;
    for (int64_t c = 0; c < 3 * m; c++)
      for (int64_t tt = 0; tt < t; tt++) rep.push_back(one.data()[c]);
    gs.push_back(Tensor::from_data({3, m, t}, std::move(rep)));
  }
  Tensor z = g.band_encode(gs);
  for (int64_t r = 0; r < z.dim(0) * z.dim(1); r++)
    CHECK(z.data()[r * t] == doctest::Approx(z.data()[r * t + 1]));
}

TEST_CASE("bs_module preserves shape and matches a primitive-composition oracle") {
  Rng rng(3);
  nn::ParameterStore store;
  auto cfg = tiny_cfg(4, 1, 11050.0);  // two bands
  auto g = gen::Generator::create(cfg, store, rng);
  REQUIRE(g.band_plan().n_bands() == 2);
  int64_t k = 2, n = 4, t = 3;
  Tensor z = Tensor::randn({k, n, t}, rng);
  Tensor out = g.bs_module(z, 0, false);
  REQUIRE(out.shape() == z.shape());

  // oracle: re-wire the block from the public primitives
  auto P = [&](const std::string& name) { return store.get("gen/" + name); };
  nn::AttentionParams ap{P("bs0/attn/wq"), P("bs0/attn/bq"), P("bs0/attn/wk"),
                         P("bs0/attn/bk"), P("bs0/attn/wv"), P("bs0/attn/bv"),
                         P("bs0/attn/wo"), P("bs0/attn/bo")};
  Tensor zp = ag::permute(z, {2, 0, 1});
  Tensor h = nn::rms_norm(zp, P("bs0/attn/norm"), 2);
  h = nn::multi_head_attention(h, ap, cfg.attention.heads, false);
  zp = ag::add(zp, h);
  h = nn::rms_norm(zp, P("bs0/ffn/norm"), 2);
  h = nn::add_rowvec(ag::matmul(h, P("bs0/ffn/w1")), P("bs0/ffn/b1"));
  h = nn::gelu(h);
  h = nn::add_rowvec(ag::matmul(h, P("bs0/ffn/w2")), P("bs0/ffn/b2"));
  zp = ag::add(zp, h);
  Tensor zt = ag::permute(zp, {1, 2, 0});
  for (int64_t j = 0; j < cfg.tcn.blocks; j++) {
    std::string tb = "bs0/tcn" + std::to_string(j) + "/";
    Tensor hb = nn::rms_norm(zt, P(tb + "norm"), 1);
    hb = nn::conv1d(hb, P(tb + "in_w"), P(tb + "in_b"), 1, 1, nn::PadMode::same);
    hb = nn::gelu(hb);
    hb = nn::conv1d(hb, P(tb + "dw_w"), P(tb + "dw_b"), 1,
                    cfg.tcn.dilations[size_t(j)], nn::PadMode::same,
                    cfg.tcn.hidden_mult * n);
    hb = nn::gelu(hb);
    hb = nn::conv1d(hb, P(tb + "out_w"), P(tb + "out_b"), 1, 1,
                    nn::PadMode::same);
    zt = ag::add(zt, hb);
  }
  CHECK(testutil::max_abs_diff(out.values(), zt.values()) < 1e-6);
}

TEST_CASE("causal bs_module leaves earlier frames bit-identical") {
  Rng rng(4);
  nn::ParameterStore store;
  auto cfg = tiny_cfg();
  cfg.causal = true;
  auto g = gen::Generator::create(cfg, store, rng);
  int64_t k = g.band_plan().n_bands(), n = cfg.feature_dim, t = 9;
  Tensor z = Tensor::randn({k, n, t}, rng);
  Tensor base = g.bs_module(z, 0, true);
  for (int64_t tp : {3, 6, 8}) {
    Tensor zp = z.detach();
    for (int64_t kk = 0; kk < k; kk++)
      for (int64_t c = 0; c < n; c++) zp.data()[(kk * n + c) * t + tp] += 1.0;
    Tensor out = g.bs_module(zp, 0, true);
    for (int64_t kk = 0; kk < k; kk++)
      for (int64_t c = 0; c < n; c++)
        for (int64_t u = 0; u < tp; u++)
          CHECK(out.data()[(kk * n + c) * t + u] ==
                base.data()[(kk * n + c) * t + u]);
  }
}

TEST_CASE("band_decode shapes, zero weights give a zero spectrogram") {
  Rng rng(5);
  nn::ParameterStore store;
  auto cfg = tiny_cfg();
  auto g = gen::Generator::create(cfg, store, rng);
  int64_t k = g.band_plan().n_bands(), t = 4;
  Tensor q = Tensor::randn({k, cfg.feature_dim, t}, rng);
  Tensor y = g.band_decode(q);
  REQUIRE(y.shape() == ag::Shape({2, 442, t}));

  // zero the decoder weights and biases -> zero output
  for (int64_t kk = 0; kk < k; kk++) {
    auto& w = store.get("gen/dec/band" + std::to_string(kk) + "/w");
    auto& b = store.get("gen/dec/band" + std::to_string(kk) + "/b");
    std::fill(w.values().begin(), w.values().end(), 0.0);
    std::fill(b.values().begin(), b.values().end(), 0.0);
  }
  Tensor y0 = g.band_decode(q);
  for (int64_t i = 0; i < y0.numel(); i++) CHECK(y0.data()[i] == 0.0);
}

TEST_CASE("forward output length equals input length") {
  Rng rng(6);
  nn::ParameterStore store;
  auto g = gen::Generator::create(tiny_cfg(), store, rng);
  for (int64_t len : {4410, 44100, 44101}) {
    auto x = testutil::random_wave(len, rng, 0.3);
    auto y = g.forward(x);
    CHECK(int64_t(y.size()) == len);
  }
}

TEST_CASE("forward equals the staged composition") {
  Rng rng(7);
  nn::ParameterStore store;
  auto cfg = tiny_cfg(8, 1, 5550.0);  // K = 4
  auto g = gen::Generator::create(cfg, store, rng);
  REQUIRE(g.band_plan().n_bands() == 4);
  auto x = testutil::random_wave(4410, rng, 0.3);
  auto direct = g.forward(x);

  auto spec = dsp::stft(x, cfg.stft);
  auto bands = dsp::split_bands(spec, g.band_plan());
  std::vector<Tensor> gs;
  for (int64_t k = 0; k < g.band_plan().n_bands(); k++)
    gs.push_back(gen::gain_shape(bands[size_t(k)],
                                 g.band_plan().bins_per_band[size_t(k)],
                                 spec.n_frames, cfg.eps_mag));
  Tensor z = g.band_encode(gs);
  for (int64_t b = 0; b < cfg.depth; b++) z = g.bs_module(z, b, cfg.causal);
  Tensor y = g.band_decode(z);
  Tensor wave = sig::istft_op(y, cfg.stft, 4410);
  CHECK(testutil::max_abs_diff(direct, wave.values()) < 1e-5);
}

TEST_CASE("paper-default generator parameter count is near the published size") {
  Rng rng(8);
  nn::ParameterStore store;
  gen::GeneratorConfig cfg;  // defaults: N=256, B=6, 160 Hz
  auto g = gen::Generator::create(cfg, store, rng);
  double count = double(g.param_count());
  CHECK(count > 16.54e6 * 0.85);
  CHECK(count < 16.54e6 * 1.15);

  // one independent per-band decoder weight set per band
  int64_t dec_sets = 0;
  for (const auto& name : store.names())
    if (name.rfind("gen/dec/band", 0) == 0 &&
        name.substr(name.size() - 2) == "/w")
      dec_sets++;
  CHECK(dec_sets == 148);
}

TEST_CASE("every generator parameter receives a gradient; silence stays finite") {
  Rng rng(9);
  nn::ParameterStore store;
  auto g = gen::Generator::create(tiny_cfg(8, 2), store, rng);
  auto x = testutil::random_wave(2205, rng, 0.3);
  store.zero_grads();
  Tensor out = g.forward_t(x);
  ag::sum(ag::square(out)).backward();
  for (const auto& name : store.names()) {
    if (name.rfind("gen/", 0) != 0) continue;
    const auto& p = store.get(name);
    REQUIRE(!p.grad().empty());
    double mx = 0.0;
    for (double gv : p.grad()) mx = std::max(mx, std::abs(gv));
    INFO(name);
    CHECK(mx > 0.0);
  }

  // silent input exercises the log-magnitude floor; everything stays finite
  std::vector<double> silent(2205, 0.0);
  store.zero_grads();
  Tensor out_s = g.forward_t(silent);
  for (double v : out_s.values()) REQUIRE(std::isfinite(v));
  ag::sum(ag::square(out_s)).backward();
  for (const auto& name : store.names()) {
    if (name.rfind("gen/", 0) != 0) continue;
    for (double gv : store.get(name).grad()) REQUIRE(std::isfinite(gv));
  }
}

TEST_CASE("sampled parameter gradients through the full forward match FD") {
  Rng rng(12);
  nn::ParameterStore store;
  auto g = gen::Generator::create(tiny_cfg(8, 1), store, rng);
  auto x = testutil::random_wave(1764, rng, 0.3);  // two hops beyond a window

  auto loss_fn = [&] { return ag::sum(ag::square(g.forward_t(x))); };
  store.zero_grads();
  loss_fn().backward();

  auto params = store.trainable("gen/");
  double worst = 0.0;
  const double h = 1e-5;
  for (int probe = 0; probe < 24; probe++) {
    auto& p = params[size_t(rng.uniform_int(0, int64_t(params.size()) - 1))];
    int64_t i = rng.uniform_int(0, p.numel() - 1);
    double v = p.data()[i];
    p.data()[i] = v + h;
    double lp = loss_fn().item();
    p.data()[i] = v - h;
    double lm = loss_fn().item();
    p.data()[i] = v;
    double fd = (lp - lm) / (2.0 * h);
    double gr = p.grad()[size_t(i)];
    if (std::abs(fd) < 1e-10 && std::abs(gr) < 1e-10) continue;
    worst = std::max(worst,
                     std::abs(fd - gr) / std::max({std::abs(fd), std::abs(gr), 1e-8}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("streaming matches the offline causal forward") {
  Rng rng(10);
  nn::ParameterStore store;
  auto cfg = tiny_cfg(8, 2);
  cfg.causal = true;
  auto g = gen::Generator::create(cfg, store, rng);
  g.set_trainable(false);
  auto x = testutil::random_wave(44100, rng, 0.3);
  auto offline = g.forward(x);

  for (int64_t chunk : {441, 4410, 13230}) {
    auto session = g.open_stream();
    std::vector<double> got;
    for (int64_t s = 0; s < int64_t(x.size()); s += chunk) {
      int64_t e = std::min<int64_t>(s + chunk, int64_t(x.size()));
      auto part = session.push(
          std::span<const double>(x.data() + s, size_t(e - s)));
      got.insert(got.end(), part.begin(), part.end());
    }
    auto tail = session.flush();
    got.insert(got.end(), tail.begin(), tail.end());
    REQUIRE(got.size() == x.size());
    CHECK(testutil::max_abs_diff(got, offline) < 1e-4);
  }
}

TEST_CASE("streaming session: empty stream, reset reproducibility") {
  Rng rng(11);
  nn::ParameterStore store;
  auto cfg = tiny_cfg();
  cfg.causal = true;
  auto g = gen::Generator::create(cfg, store, rng);
  g.set_trainable(false);

  auto session = g.open_stream();
  CHECK(session.push(std::span<const double>()).empty());
  CHECK(session.flush().empty());

  auto x = testutil::random_wave(8820, rng, 0.3);
  session.reset();
  auto a = session.push(x);
  auto a_tail = session.flush();
  a.insert(a.end(), a_tail.begin(), a_tail.end());
  session.reset();
  auto b = session.push(x);
  auto b_tail = session.flush();
  b.insert(b.end(), b_tail.begin(), b_tail.end());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); i++) CHECK(a[i] == b[i]);

  // non-causal configs cannot stream
  nn::ParameterStore store2;
  auto g2 = gen::Generator::create(tiny_cfg(), store2, rng);
  CHECK_THROWS_AS(g2.open_stream(), std::invalid_argument);
}
