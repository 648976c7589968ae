// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <string>
#include <vector>

#include "apollo/dsp.hpp"
#include "apollo/nn.hpp"
#include "apollo/params.hpp"
#include "apollo/signal_ops.hpp"

namespace apollo::disc {

using ag::Tensor;

struct DiscriminatorConfig {
  std::vector<int64_t> window_sizes = {128, 256, 512, 1024, 2048};
  int64_t base_channels = 32;
  int64_t n_layers = 7;
  int64_t sample_rate = 44100;

  int64_t ensemble_size() const { return int64_t(window_sizes.size()); }
  void validate() const;
};

struct DiscriminatorOutput {
  Tensor score_map;            // final-layer conv output
  std::vector<Tensor> hidden;  // one tap after each LeakyReLU, 6 total
};

// Multi-resolution STFT discriminator: 7-layer spectral-normalized 2-D conv
// stack per resolution, channels 2 -> C..32C -> 1, stride 2 on every even
// layer, LeakyReLU(0.2) taps on layers 1-6.
class DiscriminatorEnsemble {
 public:
  static DiscriminatorEnsemble create(const DiscriminatorConfig& cfg,
                                      nn::ParameterStore& store, Rng& rng,
                                      const std::string& prefix = "disc/");
  static DiscriminatorEnsemble attach(const DiscriminatorConfig& cfg,
                                      nn::ParameterStore& store,
                                      const std::string& prefix = "disc/");

  const DiscriminatorConfig& config() const { return cfg_; }
  int64_t param_count() const;
  void set_trainable(bool trainable);

  // spec: (2, F, T), unit l2 norm (zero input tolerated)
  DiscriminatorOutput disc_forward(const Tensor& spec, int64_t index,
                                   bool training) const;

  // STFT per window (hop = window/4), unit-norm, then disc_forward
  std::vector<DiscriminatorOutput> ensemble_forward(const Tensor& wave,
                                                    bool training) const;
  std::vector<DiscriminatorOutput> ensemble_forward(
      std::span<const double> wave, bool training) const;

 private:
  struct Layer {
    Tensor w, b, u;
    int64_t stride;
    bool spectral;
  };

  DiscriminatorEnsemble(DiscriminatorConfig cfg, nn::ParameterStore* store,
                        std::string prefix);
  void build(Rng* rng);

  DiscriminatorConfig cfg_;
  nn::ParameterStore* store_ = nullptr;
  std::string prefix_;
  std::vector<std::vector<Layer>> resolutions_;
};

}  // namespace apollo::disc
