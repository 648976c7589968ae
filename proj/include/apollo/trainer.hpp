// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "apollo/config.hpp"
#include "apollo/data.hpp"
#include "apollo/discriminator.hpp"
#include "apollo/generator.hpp"
#include "apollo/losses.hpp"
#include "apollo/params.hpp"

namespace apollo::train {

using ag::Tensor;

// decoupled-weight-decay Adam on a fixed parameter group
class AdamW {
 public:
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(const std::vector<Tensor>& params);
  void step(std::vector<Tensor>& params, double lr, double weight_decay);

  int64_t t() const { return t_; }
  std::vector<std::vector<double>>& moments_m() { return m_; }
  std::vector<std::vector<double>>& moments_v() { return v_; }
  void set_t(int64_t t) { t_ = t; }

 private:
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// single-tensor update, 1-based step index t
void adamw_update(std::vector<double>& param, const std::vector<double>& grad,
                  std::vector<double>& m, std::vector<double>& v, int64_t t,
                  double lr, double weight_decay, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

// scales grads so the global L2 norm is at most max_norm; returns the
// pre-clip norm
double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

class Trainer {
 public:
  // fresh run; writes config.json into run_dir
  Trainer(const cfg::RunConfig& rc, data::StemLibrary lib,
          const std::string& run_dir);

  // continue a run from run_dir/checkpoints/last
  static std::unique_ptr<Trainer> resume(const std::string& run_dir,
                                         data::StemLibrary lib);

  losses::LossReport train_step(const data::TrainBatch& batch);

  // full loop: epochs of train steps + validation, lr schedule, best/last
  // checkpoints, early stopping; returns the best checkpoint path
  std::string run();

  gen::Generator& generator() { return *gen_; }
  disc::DiscriminatorEnsemble& discriminator() { return *disc_; }
  nn::ParameterStore& store() { return store_; }
  const cfg::RunConfig& config() const { return rc_; }
  int64_t step() const { return step_; }
  double validation_loss();

  void save_checkpoint(const std::string& dir) const;

 private:
  Trainer(const cfg::RunConfig& rc, data::StemLibrary lib,
          const std::string& run_dir, bool resuming);
  void load_train_state(const std::string& dir);
  double current_lr(double base) const;
  void log_step(const losses::LossReport& rep);

  cfg::RunConfig rc_;
  data::StemLibrary lib_;
  std::string run_dir_;
  nn::ParameterStore store_;
  std::unique_ptr<gen::Generator> gen_;
  std::unique_ptr<disc::DiscriminatorEnsemble> disc_;
  std::vector<Tensor> gen_params_, disc_params_;
  AdamW opt_gen_, opt_disc_;
  Rng data_rng_;
  std::vector<data::TrainBatch> val_set_;
  int64_t epoch_ = 0;
  int64_t step_ = 0;
  double best_val_ = 1e300;
  int64_t stale_epochs_ = 0;
};

}  // namespace apollo::train
