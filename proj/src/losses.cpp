// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/losses.hpp"

#include <cmath>

#include "apollo/signal_ops.hpp"

namespace apollo::losses {

void LossWeights::validate() const {
  check(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma),
        "loss weights must be finite");
  check(alpha >= 0 && beta >= 0 && gamma >= 0,
        "loss weights must be nonnegative");
}

Tensor lsgan_disc_loss(const std::vector<DiscriminatorOutput>& real_outs,
                       const std::vector<DiscriminatorOutput>& fake_outs) {
  check(!real_outs.empty() && real_outs.size() == fake_outs.size(),
        "lsgan_disc_loss: ensemble size mismatch");
  Tensor total = Tensor::scalar(0.0);
  for (size_t i = 0; i < real_outs.size(); i++) {
    Tensor real_term =
        ag::mean(ag::square(ag::add_scalar(real_outs[i].score_map, -1.0)));
    Tensor fake_term = ag::mean(ag::square(fake_outs[i].score_map));
    total = ag::add(total, ag::add(real_term, fake_term));
  }
  return total;
}

Tensor lsgan_gen_loss(const std::vector<DiscriminatorOutput>& fake_outs) {
  check(!fake_outs.empty(), "lsgan_gen_loss: empty ensemble");
  Tensor total = Tensor::scalar(0.0);
  for (const auto& out : fake_outs)
    total = ag::add(
        total, ag::mean(ag::square(ag::add_scalar(out.score_map, -1.0))));
  return total;
}

Tensor multires_rec_loss(const Tensor& est, const Tensor& target,
                         const std::vector<int64_t>& windows, bool normalized,
                         int64_t sample_rate) {
  check(est.rank() == 1 && target.rank() == 1, "rec loss: waves are rank 1");
  check(est.numel() == target.numel(), "rec loss: length mismatch");
  check(!windows.empty(), "rec loss: no windows");
  Tensor total = Tensor::scalar(0.0);
  for (int64_t w : windows) {
    dsp::StftConfig cfg;
    cfg.sample_rate = sample_rate;
    cfg.window_len = w;
    cfg.hop_len = w / 4;
    cfg.fft_len = w;
    Tensor mag_est = sig::magnitude(sig::stft_op(est, cfg));
    Tensor mag_tgt = sig::magnitude(sig::stft_op(target, cfg));
    Tensor term = ag::mean(ag::abs(ag::sub(mag_est, mag_tgt)));
    if (normalized) {
      // the target is the reference signal; its mean magnitude is a constant
      double denom = ag::mean(ag::abs(mag_tgt)).item();
      term = ag::mul_scalar(term, 1.0 / std::max(denom, 1e-8));
    }
    total = ag::add(total, term);
  }
  return ag::mul_scalar(total, 1.0 / double(windows.size()));
}

Tensor feature_matching_loss(
    const std::vector<DiscriminatorOutput>& fake_outs,
    const std::vector<DiscriminatorOutput>& real_outs) {
  check(!fake_outs.empty() && fake_outs.size() == real_outs.size(),
        "feature_matching_loss: ensemble size mismatch");
  Tensor total = Tensor::scalar(0.0);
  for (size_t i = 0; i < fake_outs.size(); i++) {
    const auto& fh = fake_outs[i].hidden;
    const auto& rh = real_outs[i].hidden;
    check(!fh.empty() && fh.size() == rh.size(),
          "feature_matching_loss: tap count mismatch");
    Tensor layer_sum = Tensor::scalar(0.0);
    for (size_t j = 0; j < fh.size(); j++) {
      check(fh[j].shape() == rh[j].shape(),
            "feature_matching_loss: hidden shape mismatch");
      Tensor real_sg = rh[j].detach();
      Tensor num = ag::mean(ag::abs(ag::sub(fh[j], real_sg)));
      double den = ag::mean(ag::abs(real_sg)).item();  // sg[.]: a constant
      layer_sum =
          ag::add(layer_sum, ag::mul_scalar(num, 1.0 / std::max(den, 1e-8)));
    }
    total = ag::add(total, ag::mul_scalar(layer_sum, 1.0 / double(fh.size())));
  }
  return ag::mul_scalar(total, 1.0 / double(fake_outs.size()));
}

Tensor generator_total(const Tensor& l_rec, const Tensor& l_fm,
                       const Tensor& l_gan, const LossWeights& w) {
  w.validate();
  Tensor total = ag::mul_scalar(l_rec, w.alpha);
  total = ag::add(total, ag::mul_scalar(l_fm, w.beta));
  total = ag::add(total, ag::mul_scalar(l_gan, w.gamma));
  return total;
}

}  // namespace apollo::losses
