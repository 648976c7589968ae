// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace apollo::fft {

using cplx = std::complex<double>;

// In-place DFT of arbitrary size (radix-2 for powers of two, Bluestein
// otherwise). inverse=true applies the unscaled conjugate transform; the
// caller divides by n where a true inverse is wanted.
void dft(std::vector<cplx>& data, bool inverse);

// One-sided spectrum of a real signal, n/2+1 bins.
std::vector<cplx> rfft(std::span<const double> x);

// Real inverse of a one-sided spectrum, scaled by 1/n.
std::vector<double> irfft(std::span<const cplx> spec, int64_t n);

// Adjoint of rfft as a linear map R^n -> R^(2*(n/2+1)) over (re, im):
// given the cotangent of the one-sided spectrum, returns the cotangent of
// the time signal.
std::vector<double> rfft_adjoint(std::span<const cplx> grad_spec, int64_t n);

// Adjoint of irfft: given the cotangent of the time signal, returns the
// cotangent of the one-sided spectrum.
std::vector<cplx> irfft_adjoint(std::span<const double> grad_time);

}  // namespace apollo::fft
