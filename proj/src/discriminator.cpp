// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/discriminator.hpp"

#include <cmath>

namespace apollo::disc {

using ag::Shape;

void DiscriminatorConfig::validate() const {
  check(!window_sizes.empty(), "discriminator needs at least one window");
  for (int64_t w : window_sizes)
    check(w >= 8 && w % 4 == 0, "discriminator window sizes must be >=8, /4");
  check(base_channels >= 1, "base_channels must be >= 1");
  check(n_layers == 7, "the conv stack is fixed at 7 layers");
  check(sample_rate > 0, "sample_rate must be positive");
}

DiscriminatorEnsemble::DiscriminatorEnsemble(DiscriminatorConfig cfg,
                                             nn::ParameterStore* store,
                                             std::string prefix)
    : cfg_(std::move(cfg)), store_(store), prefix_(std::move(prefix)) {
  cfg_.validate();
}

DiscriminatorEnsemble DiscriminatorEnsemble::create(
    const DiscriminatorConfig& cfg, nn::ParameterStore& store, Rng& rng,
    const std::string& prefix) {
  DiscriminatorEnsemble d(cfg, &store, prefix);
  d.build(&rng);
  return d;
}

DiscriminatorEnsemble DiscriminatorEnsemble::attach(
    const DiscriminatorConfig& cfg, nn::ParameterStore& store,
    const std::string& prefix) {
  DiscriminatorEnsemble d(cfg, &store, prefix);
  d.build(nullptr);
  return d;
}

void DiscriminatorEnsemble::build(Rng* rng) {
  const int64_t c = cfg_.base_channels;
  // channel progression 2 -> C -> 2C -> ... -> 32C -> 1
  std::vector<int64_t> channels = {2, c, 2 * c, 4 * c, 8 * c, 16 * c, 32 * c, 1};
  std::vector<int64_t> strides = {1, 2, 1, 2, 1, 2, 1};

  resolutions_.clear();
  for (int64_t i = 0; i < cfg_.ensemble_size(); i++) {
    std::vector<Layer> layers;
    for (int64_t j = 0; j < cfg_.n_layers; j++) {
      std::string base = prefix_ + "res" + std::to_string(i) + "/layer" +
                         std::to_string(j + 1) + "/";
      Layer l;
      l.stride = strides[size_t(j)];
      l.spectral = j < cfg_.n_layers - 1;
      int64_t cin = channels[size_t(j)], cout = channels[size_t(j + 1)];
      if (rng) {
        double a = std::sqrt(1.0 / double(cin * 9));
        l.w = store_->create(base + "w",
                             Tensor::uniform({cout, cin, 3, 3}, *rng, -a, a));
        l.b = store_->create(base + "b", Tensor::zeros({cout}));
        if (l.spectral) {
          Tensor u = Tensor::randn({cout}, *rng);
          double nrm = 0.0;
          for (double v : u.values()) nrm += v * v;
          nrm = std::sqrt(nrm) + 1e-12;
          for (double& v : u.values()) v /= nrm;
          l.u = store_->create(base + "u", std::move(u), /*trainable=*/false);
        }
      } else {
        l.w = store_->get(base + "w");
        check(l.w.shape() == Shape({cout, cin, 3, 3}),
              "checkpoint shape mismatch for " + base + "w");
        l.b = store_->get(base + "b");
        if (l.spectral) l.u = store_->get(base + "u");
      }
      layers.push_back(std::move(l));
    }
    resolutions_.push_back(std::move(layers));
  }
}

int64_t DiscriminatorEnsemble::param_count() const {
  return store_->param_count(prefix_);
}

void DiscriminatorEnsemble::set_trainable(bool trainable) {
  for (const auto& name : store_->names())
    if (name.rfind(prefix_, 0) == 0 && store_->is_param(name))
      store_->get(name).set_requires_grad(trainable);
}

DiscriminatorOutput DiscriminatorEnsemble::disc_forward(const Tensor& spec,
                                                        int64_t index,
                                                        bool training) const {
  check(index >= 0 && index < cfg_.ensemble_size(), "disc_forward: bad index");
  check(spec.rank() == 3 && spec.dim(0) == 2,
        "disc_forward: input must be (2, F, T)");
  double ss = 0.0;
  for (int64_t i = 0; i < spec.numel(); i++) ss += spec.data()[i] * spec.data()[i];
  double nrm = std::sqrt(ss);
  check(std::abs(nrm - 1.0) <= 1e-3 || nrm <= 1e-3,
        "disc_forward: input is not unit-normalized");

  DiscriminatorOutput out;
  Tensor h = spec;
  const auto& layers = resolutions_[size_t(index)];
  for (size_t j = 0; j < layers.size(); j++) {
    const Layer& l = layers[j];
    Tensor w = l.w;
    if (l.spectral) {
      Tensor u = l.u;  // updated in place during training
      w = nn::spectral_norm_apply(l.w, u, training);
    }
    h = nn::conv2d(h, w, l.b, l.stride, l.stride, 1, 1);
    if (j + 1 < layers.size()) {
      h = nn::leaky_relu(h, 0.2);
      out.hidden.push_back(h);
    }
  }
  out.score_map = h;
  return out;
}

std::vector<DiscriminatorOutput> DiscriminatorEnsemble::ensemble_forward(
    const Tensor& wave, bool training) const {
  check(wave.rank() == 1, "ensemble_forward: wave must be rank 1");
  int64_t longest = 0;
  for (int64_t w : cfg_.window_sizes) longest = std::max(longest, w);
  check(wave.numel() >= longest,
        "ensemble_forward: clip shorter than the largest window");
  std::vector<DiscriminatorOutput> outs;
  for (int64_t i = 0; i < cfg_.ensemble_size(); i++) {
    dsp::StftConfig scfg;
    scfg.sample_rate = cfg_.sample_rate;
    scfg.window_len = cfg_.window_sizes[size_t(i)];
    scfg.hop_len = scfg.window_len / 4;
    scfg.fft_len = scfg.window_len;
    Tensor spec = sig::stft_op(wave, scfg);
    spec = sig::l2_normalize(spec);
    outs.push_back(disc_forward(spec, i, training));
  }
  return outs;
}

std::vector<DiscriminatorOutput> DiscriminatorEnsemble::ensemble_forward(
    std::span<const double> wave, bool training) const {
  Tensor w = Tensor::from_data({int64_t(wave.size())},
                               std::vector<double>(wave.begin(), wave.end()));
  return ensemble_forward(w, training);
}

}  // namespace apollo::disc
