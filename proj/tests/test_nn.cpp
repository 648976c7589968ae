// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include "apollo/nn.hpp"
#include "testutil.hpp"

using namespace apollo;
using ag::Tensor;

TEST_CASE("rms_norm of all ones is all ones") {
  Tensor x = Tensor::full({2, 4}, 1.0);
  Tensor gain = Tensor::full({4}, 1.0);
  Tensor y = nn::rms_norm(x, gain, 1);
  for (int64_t i = 0; i < y.numel(); i++)
    CHECK(y.data()[i] == doctest::Approx(1.0).epsilon(1e-7));

  // scale invariance up to eps
  Tensor xc = Tensor::full({2, 4}, 37.5);
  Tensor yc = nn::rms_norm(xc, gain, 1);
  for (int64_t i = 0; i < yc.numel(); i++)
    CHECK(yc.data()[i] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("rms_norm matches a scalar-loop oracle and its gradients check out") {
  Rng rng(1);
  Tensor x = Tensor::randn({3, 8}, rng);
  Tensor gain = Tensor::uniform({8}, rng, 0.5, 1.5);
  Tensor y = nn::rms_norm(x, gain, 1);
  for (int64_t r = 0; r < 3; r++) {
    double ss = 0.0;
    for (int64_t i = 0; i < 8; i++) {
      double v = x.data()[r * 8 + i];
      ss += v * v;
    }
    double inv = 1.0 / std::sqrt(ss / 8.0 + 1e-8);
    for (int64_t i = 0; i < 8; i++)
      CHECK(y.data()[r * 8 + i] ==
            doctest::Approx(gain.data()[i] * x.data()[r * 8 + i] * inv)
                .epsilon(1e-6));
  }

  x.set_requires_grad(true);
  gain.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::rms_norm(x, gain, 1))); },
            {x, gain}) < 1e-5);

  // normalization over a non-trailing axis
  Tensor x3 = Tensor::randn({2, 5, 3}, rng);
  Tensor g5 = Tensor::uniform({5}, rng, 0.5, 1.5);
  x3.set_requires_grad(true);
  g5.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::rms_norm(x3, g5, 1))); },
            {x3, g5}) < 1e-5);
}

TEST_CASE("glu halves the dimension; zero gate gives a/2; zero lin gives 0") {
  Rng rng(2);
  Tensor x = Tensor::randn({3, 6}, rng);
  // zero the gate half
  for (int64_t r = 0; r < 3; r++)
    for (int64_t i = 3; i < 6; i++) x.data()[r * 6 + i] = 0.0;
  Tensor y = nn::glu(x, 1);
  CHECK(y.shape() == ag::Shape({3, 3}));
  for (int64_t r = 0; r < 3; r++)
    for (int64_t i = 0; i < 3; i++)
      CHECK(y.data()[r * 3 + i] ==
            doctest::Approx(0.5 * x.data()[r * 6 + i]));

  Tensor x2 = Tensor::randn({2, 4}, rng);
  x2.data()[0] = x2.data()[1] = x2.data()[4] = x2.data()[5] = 0.0;
  Tensor y2 = nn::glu(x2, 1);
  CHECK(y2.data()[0] == 0.0);
  CHECK(y2.data()[1] == 0.0);

  Tensor odd = Tensor::randn({3, 5}, rng);
  CHECK_THROWS_AS(nn::glu(odd, 1), std::invalid_argument);
}

TEST_CASE("glu matches a scalar oracle and passes gradcheck") {
  Rng rng(3);
  Tensor x = Tensor::randn({4, 8}, rng);
  Tensor y = nn::glu(x, 1);
  for (int64_t r = 0; r < 4; r++)
    for (int64_t i = 0; i < 4; i++) {
      double a = x.data()[r * 8 + i];
      double b = x.data()[r * 8 + 4 + i];
      CHECK(y.data()[r * 4 + i] ==
            doctest::Approx(a / (1.0 + std::exp(-b))).epsilon(1e-7));
    }
  x.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::glu(x, 1))); }, {x}) < 1e-6);
  // channel-axis variant used by the band decoder
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::glu(x, 0))); }, {x}) < 1e-6);
}

TEST_CASE("conv1d identity kernel passes input through") {
  Rng rng(4);
  Tensor x = Tensor::randn({2, 6}, rng);
  Tensor w = Tensor::zeros({2, 2, 1});
  w.data()[0 * 2 + 0] = 1.0;  // w[0][0][0]
  w.data()[1 * 2 + 1] = 1.0;  // w[1][1][0]
  Tensor y = nn::conv1d(x, w, Tensor(), 1, 1, nn::PadMode::same);
  for (int64_t i = 0; i < x.numel(); i++)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]));
}

TEST_CASE("causal conv1d output never looks ahead") {
  Rng rng(5);
  Tensor w = Tensor::randn({3, 2, 3}, rng);
  Tensor b = Tensor::randn({3}, rng);
  auto xv = testutil::random_wave(16, rng);
  Tensor x = Tensor::from_data({2, 8}, std::vector<double>(xv.begin(), xv.end()));
  Tensor y0 = nn::conv1d(x, w, b, 1, 2, nn::PadMode::causal);
  for (int64_t t = 0; t < 8; t++) {
    Tensor xp = x.detach();
    for (int64_t c = 0; c < 2; c++) xp.data()[c * 8 + t] += 1.0;
    Tensor y1 = nn::conv1d(xp, w, b, 1, 2, nn::PadMode::causal);
    for (int64_t c = 0; c < 3; c++)
      for (int64_t u = 0; u < t; u++)
        CHECK(y1.data()[c * 8 + u] == y0.data()[c * 8 + u]);
  }
}

TEST_CASE("conv1d matches a direct-sum oracle (k=3, dilation 2)") {
  Rng rng(6);
  Tensor x = Tensor::randn({2, 8}, rng);
  Tensor w = Tensor::randn({3, 2, 3}, rng);
  Tensor b = Tensor::randn({3}, rng);
  Tensor y = nn::conv1d(x, w, b, 1, 2, nn::PadMode::same);
  REQUIRE(y.shape() == ag::Shape({3, 8}));
  // same padding: total (k-1)*d = 4, left 2
  for (int64_t co = 0; co < 3; co++)
    for (int64_t t = 0; t < 8; t++) {
      double acc = b.data()[co];
      for (int64_t ci = 0; ci < 2; ci++)
        for (int64_t k = 0; k < 3; k++) {
          int64_t src = t + k * 2 - 2;
          if (src < 0 || src >= 8) continue;
          acc += w.data()[(co * 2 + ci) * 3 + k] * x.data()[ci * 8 + src];
        }
      CHECK(y.data()[co * 8 + t] == doctest::Approx(acc).epsilon(1e-9));
    }

  x.set_requires_grad(true);
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              return ag::sum(ag::square(
                  nn::conv1d(x, w, b, 1, 2, nn::PadMode::causal)));
            },
            {x, w, b}) < 1e-5);

  // depthwise grouping
  Tensor wd = Tensor::randn({2, 1, 3}, rng);
  wd.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              return ag::sum(ag::square(
                  nn::conv1d(x, wd, Tensor(), 1, 1, nn::PadMode::causal, 2)));
            },
            {x, wd}) < 1e-5);

  CHECK_THROWS_AS(nn::conv1d(x, w, b, 0, 1, nn::PadMode::same),
                  std::invalid_argument);
}

TEST_CASE("conv2d: 1x1 identity, stride-2 shape arithmetic, direct oracle") {
  Rng rng(7);
  Tensor x = Tensor::randn({1, 8, 8}, rng);
  Tensor wi = Tensor::full({1, 1, 1, 1}, 1.0);
  Tensor yi = nn::conv2d(x, wi, Tensor(), 1, 1, 0, 0);
  for (int64_t i = 0; i < x.numel(); i++)
    CHECK(yi.data()[i] == doctest::Approx(x.data()[i]));

  Tensor w = Tensor::randn({2, 1, 3, 3}, rng);
  Tensor b = Tensor::randn({2}, rng);
  Tensor ys = nn::conv2d(x, w, b, 2, 2, 1, 1);
  CHECK(ys.shape() == ag::Shape({2, 4, 4}));

  Tensor y = nn::conv2d(x, w, b, 1, 1, 1, 1);
  for (int64_t co = 0; co < 2; co++)
    for (int64_t i = 0; i < 8; i++)
      for (int64_t j = 0; j < 8; j++) {
        double acc = b.data()[co];
        for (int64_t ky = 0; ky < 3; ky++)
          for (int64_t kx = 0; kx < 3; kx++) {
            int64_t yy = i + ky - 1, xx = j + kx - 1;
            if (yy < 0 || yy >= 8 || xx < 0 || xx >= 8) continue;
            acc += w.data()[(co * 9) + ky * 3 + kx] * x.data()[yy * 8 + xx];
          }
        CHECK(y.data()[(co * 8 + i) * 8 + j] ==
              doctest::Approx(acc).epsilon(1e-9));
      }

  x.set_requires_grad(true);
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              return ag::sum(ag::square(nn::conv2d(x, w, b, 2, 2, 1, 1)));
            },
            {x, w, b}) < 1e-5);
}

TEST_CASE("spectral norm: scaled identity, rank-1, and power-iteration quality") {
  Rng rng(8);
  // w = 2I -> w/sigma = I
  Tensor w = Tensor::zeros({4, 4});
  for (int64_t i = 0; i < 4; i++) w.data()[i * 4 + i] = 2.0;
  Tensor u = Tensor::full({4}, 0.5);
  for (int64_t it = 0; it < 20; it++) (void)nn::spectral_norm_apply(w, u, true);
  Tensor wn = nn::spectral_norm_apply(w, u, false);
  for (int64_t i = 0; i < 4; i++)
    for (int64_t j = 0; j < 4; j++)
      CHECK(wn.data()[i * 4 + j] ==
            doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6));

  // rank-1 u v^T ends up with unit spectral norm
  Tensor uvec = Tensor::randn({3}, rng), vvec = Tensor::randn({5}, rng);
  Tensor r1 = Tensor::zeros({3, 5});
  for (int64_t i = 0; i < 3; i++)
    for (int64_t j = 0; j < 5; j++)
      r1.data()[i * 5 + j] = uvec.data()[i] * vvec.data()[j];
  Tensor u1 = Tensor::full({3}, 1.0);
  for (int64_t it = 0; it < 30; it++) (void)nn::spectral_norm_apply(r1, u1, true);
  Tensor r1n = nn::spectral_norm_apply(r1, u1, false);
  double fro = 0.0;  // for rank one, spectral norm == frobenius norm
  for (int64_t i = 0; i < r1n.numel(); i++)
    fro += r1n.data()[i] * r1n.data()[i];
  CHECK(std::sqrt(fro) == doctest::Approx(1.0).epsilon(1e-6));

  // random 8x8: sigma_max of the result is ~1 after 50 iterations,
  // verified against a power-method oracle run to convergence
  Tensor w8 = Tensor::randn({8, 8}, rng);
  Tensor u8 = Tensor::randn({8}, rng);
  for (int64_t it = 0; it < 50; it++) (void)nn::spectral_norm_apply(w8, u8, true);
  Tensor w8n = nn::spectral_norm_apply(w8, u8, false);
  // oracle: power iteration on (w8n^T w8n) from a fresh start
  std::vector<double> v(8, 1.0);
  for (int64_t it = 0; it < 500; it++) {
    std::vector<double> wv(8, 0.0), wtwv(8, 0.0);
    for (int64_t i = 0; i < 8; i++)
      for (int64_t j = 0; j < 8; j++)
        wv[size_t(i)] += w8n.data()[i * 8 + j] * v[size_t(j)];
    for (int64_t j = 0; j < 8; j++)
      for (int64_t i = 0; i < 8; i++)
        wtwv[size_t(j)] += w8n.data()[i * 8 + j] * wv[size_t(i)];
    double nrm = 0.0;
    for (double q : wtwv) nrm += q * q;
    nrm = std::sqrt(nrm);
    for (int64_t j = 0; j < 8; j++) v[size_t(j)] = wtwv[size_t(j)] / nrm;
  }
  std::vector<double> wv(8, 0.0);
  for (int64_t i = 0; i < 8; i++)
    for (int64_t j = 0; j < 8; j++)
      wv[size_t(i)] += w8n.data()[i * 8 + j] * v[size_t(j)];
  double sigma = 0.0;
  for (double q : wv) sigma += q * q;
  sigma = std::sqrt(sigma);
  CHECK(sigma > 0.99);
  CHECK(sigma < 1.01);

  // gradcheck through the normalized weight (u frozen in eval mode)
  Tensor wg = Tensor::randn({3, 4}, rng);
  Tensor ug = Tensor::randn({3}, rng);
  for (int64_t it = 0; it < 30; it++) (void)nn::spectral_norm_apply(wg, ug, true);
  wg.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              Tensor u_copy = ug.detach();
              return ag::sum(ag::square(nn::spectral_norm_apply(wg, u_copy, false)));
            },
            {wg}) < 1e-4);
}

TEST_CASE("spectral norm is invariant to positive weight scaling") {
  Rng rng(20);
  Tensor w = Tensor::randn({4, 6}, rng);
  Tensor w3 = ag::mul_scalar(w, 3.0).detach();
  Tensor u = Tensor::randn({4}, rng);
  Tensor u3 = u.detach();
  for (int64_t it = 0; it < 40; it++) {
    (void)nn::spectral_norm_apply(w, u, true);
    (void)nn::spectral_norm_apply(w3, u3, true);
  }
  Tensor a = nn::spectral_norm_apply(w, u, false);
  Tensor b = nn::spectral_norm_apply(w3, u3, false);
  for (int64_t i = 0; i < a.numel(); i++)
    CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-9));
}

TEST_CASE("rotary embedding: identity at position 0, isometry, closed form") {
  Rng rng(9);
  Tensor x = Tensor::randn({1, 1, 4}, rng);  // single position
  Tensor y = nn::rotary_embed(x);
  for (int64_t i = 0; i < 4; i++)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]));

  Tensor xs = Tensor::randn({2, 5, 6}, rng);
  Tensor ys = nn::rotary_embed(xs);
  for (int64_t o = 0; o < 2; o++)
    for (int64_t p = 0; p < 5; p++) {
      double nx = 0.0, ny = 0.0;
      for (int64_t i = 0; i < 6; i++) {
        nx += xs.data()[(o * 5 + p) * 6 + i] * xs.data()[(o * 5 + p) * 6 + i];
        ny += ys.data()[(o * 5 + p) * 6 + i] * ys.data()[(o * 5 + p) * 6 + i];
      }
      CHECK(std::sqrt(ny) == doctest::Approx(std::sqrt(nx)).epsilon(1e-6));
    }

  // d=4, position 1: angles are 1 and 10000^(-1/2)
  Tensor x4 = Tensor::from_data({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor y4 = nn::rotary_embed(x4);
  double th0 = 1.0, th1 = std::pow(10000.0, -0.5);
  CHECK(y4.data()[4] == doctest::Approx(5 * std::cos(th0) - 6 * std::sin(th0)).epsilon(1e-7));
  CHECK(y4.data()[5] == doctest::Approx(5 * std::sin(th0) + 6 * std::cos(th0)).epsilon(1e-7));
  CHECK(y4.data()[6] == doctest::Approx(7 * std::cos(th1) - 8 * std::sin(th1)).epsilon(1e-7));
  CHECK(y4.data()[7] == doctest::Approx(7 * std::sin(th1) + 8 * std::cos(th1)).epsilon(1e-7));

  Tensor odd = Tensor::randn({2, 3}, rng);
  CHECK_THROWS_AS(nn::rotary_embed(odd), std::invalid_argument);

  xs.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::rotary_embed(xs))); }, {xs}) <
        1e-6);
}

namespace {
nn::AttentionParams random_attn(int64_t n, Rng& rng) {
  nn::AttentionParams p;
  p.wq = Tensor::randn({n, n}, rng, 0.3);
  p.bq = Tensor::randn({n}, rng, 0.1);
  p.wk = Tensor::randn({n, n}, rng, 0.3);
  p.bk = Tensor::randn({n}, rng, 0.1);
  p.wv = Tensor::randn({n, n}, rng, 0.3);
  p.bv = Tensor::randn({n}, rng, 0.1);
  p.wo = Tensor::randn({n, n}, rng, 0.3);
  p.bo = Tensor::randn({n}, rng, 0.1);
  return p;
}
}  // namespace

TEST_CASE("attention with one position reduces to W_o(W_v x + b_v) + b_o") {
  Rng rng(10);
  int64_t n = 4;
  auto p = random_attn(n, rng);
  Tensor x = Tensor::randn({1, n}, rng);
  Tensor y = nn::multi_head_attention(x, p, 1);
  // softmax over a single element is 1, rotary at position 0 is identity
  std::vector<double> v(static_cast<size_t>(n), 0.0);
  for (int64_t o = 0; o < n; o++) {
    for (int64_t i = 0; i < n; i++)
      v[size_t(o)] += x.data()[i] * p.wv.data()[i * n + o];
    v[size_t(o)] += p.bv.data()[o];
  }
  for (int64_t o = 0; o < n; o++) {
    double acc = p.bo.data()[o];
    for (int64_t i = 0; i < n; i++) acc += v[size_t(i)] * p.wo.data()[i * n + o];
    CHECK(y.data()[o] == doctest::Approx(acc).epsilon(1e-9));
  }
}

TEST_CASE("attention with identical value rows emits identical outputs") {
  Rng rng(11);
  int64_t n = 4, pos = 5;
  auto p = random_attn(n, rng);
  // zero W_v and set b_v: every value row equals b_v regardless of input
  for (int64_t i = 0; i < n * n; i++) p.wv.data()[i] = 0.0;
  Tensor x = Tensor::randn({pos, n}, rng);
  Tensor y = nn::multi_head_attention(x, p, 2);
  for (int64_t r = 1; r < pos; r++)
    for (int64_t c = 0; c < n; c++)
      CHECK(y.data()[r * n + c] == doctest::Approx(y.data()[c]).epsilon(1e-9));
}

TEST_CASE("attention matches a hand-rolled oracle (K=3, N=4, 1 head)") {
  Rng rng(12);
  int64_t n = 4, pos = 3;
  auto p = random_attn(n, rng);
  Tensor x = Tensor::randn({pos, n}, rng);
  Tensor y = nn::multi_head_attention(x, p, 1);

  // oracle with explicit loops
  auto proj = [&](const Tensor& w, const Tensor& b, int64_t r, int64_t o) {
    double acc = b.data()[o];
    for (int64_t i = 0; i < n; i++)
      acc += x.data()[r * n + i] * w.data()[i * n + o];
    return acc;
  };
  std::vector<std::vector<double>> q(static_cast<size_t>(pos)),
      k(static_cast<size_t>(pos)), v(static_cast<size_t>(pos));
  for (int64_t r = 0; r < pos; r++) {
    for (int64_t o = 0; o < n; o++) {
      q[size_t(r)].push_back(proj(p.wq, p.bq, r, o));
      k[size_t(r)].push_back(proj(p.wk, p.bk, r, o));
      v[size_t(r)].push_back(proj(p.wv, p.bv, r, o));
    }
    // rotary, d = 4
    for (int64_t i = 0; i < 2; i++) {
      double freq = std::pow(10000.0, -2.0 * double(i) / double(n));
      double th = double(r) * freq, c = std::cos(th), s = std::sin(th);
      auto rot = [&](std::vector<double>& vec) {
        double a = vec[size_t(2 * i)], b2 = vec[size_t(2 * i + 1)];
        vec[size_t(2 * i)] = a * c - b2 * s;
        vec[size_t(2 * i + 1)] = a * s + b2 * c;
      };
      rot(q[size_t(r)]);
      rot(k[size_t(r)]);
    }
  }
  for (int64_t r = 0; r < pos; r++) {
    std::vector<double> sc(static_cast<size_t>(pos));
    double mx = -1e300;
    for (int64_t c = 0; c < pos; c++) {
      double acc = 0.0;
      for (int64_t i = 0; i < n; i++) acc += q[size_t(r)][size_t(i)] * k[size_t(c)][size_t(i)];
      sc[size_t(c)] = acc / std::sqrt(double(n));
      mx = std::max(mx, sc[size_t(c)]);
    }
    double sum = 0.0;
    for (double& s : sc) {
      s = std::exp(s - mx);
      sum += s;
    }
    for (double& s : sc) s /= sum;
    std::vector<double> ctx(static_cast<size_t>(n), 0.0);
    for (int64_t c = 0; c < pos; c++)
      for (int64_t i = 0; i < n; i++) ctx[size_t(i)] += sc[size_t(c)] * v[size_t(c)][size_t(i)];
    for (int64_t o = 0; o < n; o++) {
      double acc = p.bo.data()[o];
      for (int64_t i = 0; i < n; i++) acc += ctx[size_t(i)] * p.wo.data()[i * n + o];
      CHECK(y.data()[r * n + o] == doctest::Approx(acc).epsilon(1e-6));
    }
  }
}

TEST_CASE("attention softmax rows sum to one and causal masking is exact") {
  Rng rng(13);
  Tensor s = Tensor::randn({2, 4, 4}, rng);
  Tensor sm = nn::softmax(s, false);
  for (int64_t r = 0; r < 8; r++) {
    double sum = 0.0;
    for (int64_t c = 0; c < 4; c++) sum += sm.data()[r * 4 + c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  Tensor smc = nn::softmax(s, true);
  for (int64_t b = 0; b < 2; b++)
    for (int64_t r = 0; r < 4; r++)
      for (int64_t c = r + 1; c < 4; c++)
        CHECK(smc.data()[(b * 4 + r) * 4 + c] == 0.0);

  s.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::softmax(s, false))); }, {s}) <
        1e-5);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(nn::softmax(s, true))); }, {s}) <
        1e-5);

  // causal attention never reads future positions
  int64_t n = 4, pos = 5;
  auto p = random_attn(n, rng);
  Tensor x = Tensor::randn({pos, n}, rng);
  Tensor y0 = nn::multi_head_attention(x, p, 2, true);
  Tensor xp = x.detach();
  for (int64_t c = 0; c < n; c++) xp.data()[(pos - 1) * n + c] += 2.0;
  Tensor y1 = nn::multi_head_attention(xp, p, 2, true);
  for (int64_t r = 0; r < pos - 1; r++)
    for (int64_t c = 0; c < n; c++)
      CHECK(y0.data()[r * n + c] == y1.data()[r * n + c]);
}

TEST_CASE("attention gradients pass finite differences") {
  Rng rng(14);
  int64_t n = 4, pos = 3;
  auto p = random_attn(n, rng);
  Tensor x = Tensor::randn({pos, n}, rng);
  std::vector<Tensor> leaves = {x,    p.wq, p.bq, p.wk, p.bk,
                                p.wv, p.bv, p.wo, p.bo};
  for (auto& t : leaves) t.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              return ag::sum(ag::square(nn::multi_head_attention(x, p, 2)));
            },
            leaves) < 1e-4);
}

TEST_CASE("rms_norm rejects a zero-size axis and bad gain lengths") {
  Rng rng(15);
  Tensor x = Tensor::randn({2, 4}, rng);
  Tensor bad_gain = Tensor::full({3}, 1.0);
  CHECK_THROWS_AS(nn::rms_norm(x, bad_gain, 1), std::invalid_argument);
}
