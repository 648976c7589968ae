// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/fft.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace apollo::fft {

namespace {

bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

int64_t next_pow2(int64_t n) {
  int64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Twiddles & bit-reversal table for a power-of-two size.
struct Radix2Plan {
  int64_t n;
  std::vector<int64_t> rev;
  std::vector<cplx> tw;  // exp(-2*pi*i*k/n), k < n/2

  explicit Radix2Plan(int64_t n_) : n(n_), rev(n_), tw(n_ / 2) {
    int64_t bits = 0;
    while ((int64_t(1) << bits) < n) bits++;
    for (int64_t i = 0; i < n; i++) {
      int64_t r = 0;
      for (int64_t b = 0; b < bits; b++)
        if (i & (int64_t(1) << b)) r |= int64_t(1) << (bits - 1 - b);
      rev[i] = r;
    }
    for (int64_t k = 0; k < n / 2; k++) {
      double a = -2.0 * M_PI * double(k) / double(n);
      tw[k] = cplx(std::cos(a), std::sin(a));
    }
  }

  void run(cplx* a, bool inverse) const {
    for (int64_t i = 0; i < n; i++)
      if (i < rev[i]) std::swap(a[i], a[rev[i]]);
    for (int64_t len = 2; len <= n; len <<= 1) {
      int64_t half = len >> 1;
      int64_t step = n / len;
      for (int64_t i = 0; i < n; i += len) {
        for (int64_t j = 0; j < half; j++) {
          cplx w = tw[j * step];
          if (inverse) w = std::conj(w);
          cplx u = a[i + j];
          cplx v = a[i + j + half] * w;
          a[i + j] = u + v;
          a[i + j + half] = u - v;
        }
      }
    }
  }
};

const Radix2Plan& radix2_plan(int64_t n) {
  static std::mutex mu;
  static std::unordered_map<int64_t, std::unique_ptr<Radix2Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, std::make_unique<Radix2Plan>(n)).first;
  return *it->second;
}

// Bluestein chirp-z: arbitrary-size DFT via one power-of-two convolution.
struct BluesteinPlan {
  int64_t n;
  int64_t m;
  std::vector<cplx> chirp;    // exp(-i*pi*k^2/n), forward direction
  std::vector<cplx> b_freq;   // FFT of the wrapped conjugate chirp

  explicit BluesteinPlan(int64_t n_) : n(n_), m(next_pow2(2 * n_ - 1)), chirp(n_) {
    for (int64_t k = 0; k < n; k++) {
      // k^2 mod 2n keeps the angle argument small for large k
      int64_t k2 = (k * k) % (2 * n);
      double a = -M_PI * double(k2) / double(n);
      chirp[k] = cplx(std::cos(a), std::sin(a));
    }
    std::vector<cplx> b(m, cplx(0.0, 0.0));
    b[0] = std::conj(chirp[0]);
    for (int64_t k = 1; k < n; k++) {
      b[k] = std::conj(chirp[k]);
      b[m - k] = std::conj(chirp[k]);
    }
    radix2_plan(m).run(b.data(), false);
    b_freq = std::move(b);
  }

  void run(cplx* x, bool inverse) const {
    std::vector<cplx> a(m, cplx(0.0, 0.0));
    if (!inverse) {
      for (int64_t k = 0; k < n; k++) a[k] = x[k] * chirp[k];
    } else {
      for (int64_t k = 0; k < n; k++) a[k] = std::conj(x[k]) * chirp[k];
    }
    const auto& plan = radix2_plan(m);
    plan.run(a.data(), false);
    for (int64_t k = 0; k < m; k++) a[k] *= b_freq[k];
    plan.run(a.data(), true);
    double inv_m = 1.0 / double(m);
    if (!inverse) {
      for (int64_t k = 0; k < n; k++) x[k] = a[k] * inv_m * chirp[k];
    } else {
      for (int64_t k = 0; k < n; k++)
        x[k] = std::conj(a[k] * inv_m * chirp[k]);
    }
  }
};

const BluesteinPlan& bluestein_plan(int64_t n) {
  static std::mutex mu;
  static std::unordered_map<int64_t, std::unique_ptr<BluesteinPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, std::make_unique<BluesteinPlan>(n)).first;
  return *it->second;
}

}  // namespace

void dft(std::vector<cplx>& data, bool inverse) {
  int64_t n = static_cast<int64_t>(data.size());
  if (n <= 1) return;
  if (is_pow2(n)) {
    radix2_plan(n).run(data.data(), inverse);
  } else {
    bluestein_plan(n).run(data.data(), inverse);
  }
}

std::vector<cplx> rfft(std::span<const double> x) {
  int64_t n = static_cast<int64_t>(x.size());
  if (n == 0) throw std::invalid_argument("rfft: empty input");
  std::vector<cplx> buf(n);
  for (int64_t i = 0; i < n; i++) buf[i] = cplx(x[i], 0.0);
  dft(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> irfft(std::span<const cplx> spec, int64_t n) {
  int64_t f = static_cast<int64_t>(spec.size());
  if (f != n / 2 + 1)
    throw std::invalid_argument("irfft: spectrum size does not match n");
  std::vector<cplx> buf(n);
  for (int64_t k = 0; k < f; k++) buf[k] = spec[k];
  for (int64_t k = f; k < n; k++) buf[k] = std::conj(spec[n - k]);
  if (n % 2 == 0 && n >= 2) buf[n / 2] = cplx(buf[n / 2].real(), 0.0);
  buf[0] = cplx(buf[0].real(), 0.0);
  dft(buf, true);
  std::vector<double> out(n);
  double inv_n = 1.0 / double(n);
  for (int64_t i = 0; i < n; i++) out[i] = buf[i].real() * inv_n;
  return out;
}

std::vector<double> rfft_adjoint(std::span<const cplx> grad_spec, int64_t n) {
  int64_t f = static_cast<int64_t>(grad_spec.size());
  if (f != n / 2 + 1)
    throw std::invalid_argument("rfft_adjoint: spectrum size mismatch");
  // grad_x[t] = sum_k gr[k] cos(2 pi k t / n) - gi[k] sin(2 pi k t / n)
  //           = Re(unscaled inverse DFT of the zero-extended cotangent)
  std::vector<cplx> buf(n, cplx(0.0, 0.0));
  for (int64_t k = 0; k < f; k++) buf[k] = grad_spec[k];
  dft(buf, true);
  std::vector<double> out(n);
  for (int64_t i = 0; i < n; i++) out[i] = buf[i].real();
  return out;
}

std::vector<cplx> irfft_adjoint(std::span<const double> grad_time) {
  int64_t n = static_cast<int64_t>(grad_time.size());
  int64_t f = n / 2 + 1;
  // forward x[t] = (1/n) [re0 + 2 sum_mid (re cos - im sin) + reNyq cos(pi t)]
  // adjoint: scaled forward DFT of the cotangent with interior bins doubled
  std::vector<cplx> buf(n);
  for (int64_t i = 0; i < n; i++) buf[i] = cplx(grad_time[i], 0.0);
  dft(buf, false);
  std::vector<cplx> out(f);
  double inv_n = 1.0 / double(n);
  for (int64_t k = 0; k < f; k++) {
    bool edge = (k == 0 || (n % 2 == 0 && k == n / 2));
    double w = edge ? 1.0 : 2.0;
    // forward ignores im at DC/Nyquist, so their cotangents are zero
    out[k] = cplx(w * inv_n * buf[k].real(),
                  edge ? 0.0 : w * inv_n * buf[k].imag());
  }
  return out;
}

}  // namespace apollo::fft
