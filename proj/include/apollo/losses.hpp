// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "apollo/discriminator.hpp"
#include "apollo/tensor.hpp"

namespace apollo::losses {

using ag::Tensor;
using disc::DiscriminatorOutput;

struct LossWeights {
  double alpha = 1.0;  // reconstruction
  double beta = 1.0;   // feature matching
  double gamma = 1.0;  // adversarial

  void validate() const;
};

struct LossReport {
  double l_rec = 0.0;
  double l_fm = 0.0;
  double l_gan = 0.0;
  double l_total = 0.0;
  double l_disc = 0.0;
};

// sum_i mean[(D_i(real) - 1)^2] + sum_i mean[D_i(fake)^2]
Tensor lsgan_disc_loss(const std::vector<DiscriminatorOutput>& real_outs,
                       const std::vector<DiscriminatorOutput>& fake_outs);

// sum_i mean[(D_i(fake) - 1)^2]
Tensor lsgan_gen_loss(const std::vector<DiscriminatorOutput>& fake_outs);

// multi-resolution magnitude MAE; normalized=true divides each window term
// by the target's mean magnitude
Tensor multires_rec_loss(const Tensor& est, const Tensor& target,
                         const std::vector<int64_t>& windows, bool normalized,
                         int64_t sample_rate);

// layer-normalized MAE between hidden taps; the real-path activations are
// treated as constants (stop-gradient)
Tensor feature_matching_loss(const std::vector<DiscriminatorOutput>& fake_outs,
                             const std::vector<DiscriminatorOutput>& real_outs);

Tensor generator_total(const Tensor& l_rec, const Tensor& l_fm,
                       const Tensor& l_gan, const LossWeights& w);

inline std::vector<int64_t> default_rec_windows() {
  return {32, 64, 128, 256, 512, 1024, 2048};
}

}  // namespace apollo::losses
