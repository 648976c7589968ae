// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "apollo/data.hpp"
#include "apollo/discriminator.hpp"
#include "apollo/generator.hpp"
#include "apollo/losses.hpp"

namespace apollo::cfg {

struct LossConfig {
  losses::LossWeights weights;
  std::vector<int64_t> rec_windows = losses::default_rec_windows();
  bool rec_normalized = true;
};

struct TrainConfig {
  double gen_lr = 1e-3;
  double disc_lr = 1e-4;
  double weight_decay = 0.01;
  double lr_decay = 0.98;
  int64_t lr_decay_every_epochs = 2;
  double grad_clip_norm = 5.0;
  int64_t early_stop_patience = 20;
  int64_t batch_size = 1;
  int64_t steps_per_epoch = 8;
  int64_t epochs = 100;
  uint64_t seed = 0;
  int64_t val_batches = 1;
  int64_t warmup_steps = 0;  // adversarial weight held at 0 for these steps

  void validate() const;
};

// One document, flat sections per module; defaults follow the reference
// training recipe.
struct RunConfig {
  gen::GeneratorConfig generator;
  disc::DiscriminatorConfig discriminator;
  LossConfig losses;
  data::DataConfig data;
  TrainConfig trainer;

  void validate() const;
};

RunConfig default_run_config();

// strict parse: unknown keys are rejected with their full path
RunConfig run_config_from_json(const std::string& text);
RunConfig run_config_from_file(const std::string& path);
std::string run_config_to_json(const RunConfig& rc);

}  // namespace apollo::cfg
