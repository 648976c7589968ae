// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "apollo/dsp.hpp"
#include "apollo/tensor.hpp"

namespace apollo::sig {

using ag::Tensor;

// STFT as a differentiable linear op: wave (L) -> (2, F, T) with
// plane 0 = real, plane 1 = imaginary.
Tensor stft_op(const Tensor& wave, const dsp::StftConfig& cfg);

// iSTFT as a differentiable linear op: (2, F, T) -> wave (out_len).
Tensor istft_op(const Tensor& spec, const dsp::StftConfig& cfg,
                int64_t out_len);

// (2, ...) -> (...): sqrt(re^2 + im^2) per bin
Tensor magnitude(const Tensor& spec, double eps = 1e-12);

// x / max(||x||_2, eps) over the whole tensor
Tensor l2_normalize(const Tensor& x, double eps = 1e-12);

// plain-value helpers between dsp and tensor land
Tensor spectrogram_to_tensor(const dsp::ComplexSpectrogram& spec);
dsp::ComplexSpectrogram tensor_to_spectrogram(const Tensor& t,
                                              const dsp::StftConfig& cfg);

}  // namespace apollo::sig
