// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace apollo::train {

namespace fs = std::filesystem;
using nlohmann::json;

void adamw_update(std::vector<double>& param, const std::vector<double>& grad,
                  std::vector<double>& m, std::vector<double>& v, int64_t t,
                  double lr, double weight_decay, double beta1, double beta2,
                  double eps) {
  check(param.size() == grad.size() && param.size() == m.size() &&
            param.size() == v.size(),
        "adamw_update: size mismatch");
  check(t >= 1, "adamw_update: step index is 1-based");
  double bc1 = 1.0 - std::pow(beta1, double(t));
  double bc2 = 1.0 - std::pow(beta2, double(t));
  for (size_t i = 0; i < param.size(); i++) {
    double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    param[i] -= lr * weight_decay * param[i];
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void AdamW::init(const std::vector<Tensor>& params) {
  t_ = 0;
  m_.clear();
  v_.clear();
  for (const Tensor& p : params) {
    m_.emplace_back(size_t(p.numel()), 0.0);
    v_.emplace_back(size_t(p.numel()), 0.0);
  }
}

void AdamW::step(std::vector<Tensor>& params, double lr, double weight_decay) {
  check(params.size() == m_.size(), "AdamW: not initialized for this group");
  t_++;
  for (size_t i = 0; i < params.size(); i++) {
    Tensor& p = params[i];
    check(!p.grad().empty(), "AdamW: parameter has no gradient");
    adamw_update(p.values(), p.grad(), m_[i], v_[i], t_, lr, weight_decay,
                 beta1, beta2, eps);
  }
}

double clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
  double ss = 0.0;
  for (const Tensor& p : params) {
    if (p.grad().empty()) continue;
    for (double g : p.grad()) ss += g * g;
  }
  double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (const Tensor& p : params) {
      Tensor& mp = const_cast<Tensor&>(p);
      if (mp.grad().empty()) continue;
      for (double& g : mp.grad()) g *= scale;
    }
  }
  return norm;
}

Trainer::Trainer(const cfg::RunConfig& rc, data::StemLibrary lib,
                 const std::string& run_dir)
    : Trainer(rc, std::move(lib), run_dir, false) {}

Trainer::Trainer(const cfg::RunConfig& rc, data::StemLibrary lib,
                 const std::string& run_dir, bool resuming)
    : rc_(rc), lib_(std::move(lib)), run_dir_(run_dir), data_rng_(0) {
  rc_.validate();
  fs::create_directories(fs::path(run_dir_) / "logs");
  fs::create_directories(fs::path(run_dir_) / "checkpoints");
  if (!resuming) {
    std::ofstream cf(fs::path(run_dir_) / "config.json");
    cf << cfg::run_config_to_json(rc_) << "\n";
  }

  Rng init_rng(rc_.trainer.seed);
  gen_ = std::make_unique<gen::Generator>(
      gen::Generator::create(rc_.generator, store_, init_rng));
  disc_ = std::make_unique<disc::DiscriminatorEnsemble>(
      disc::DiscriminatorEnsemble::create(rc_.discriminator, store_, init_rng));
  gen_params_ = store_.trainable("gen/");
  disc_params_ = store_.trainable("disc/");
  opt_gen_.init(gen_params_);
  opt_disc_.init(disc_params_);

  data_rng_ = Rng(rc_.trainer.seed ^ 0x5eedD47aULL);
  Rng val_rng(rc_.trainer.seed ^ 0x7a11Da7aULL);
  for (int64_t i = 0; i < rc_.trainer.val_batches; i++)
    val_set_.push_back(
        data::make_batch(lib_, val_rng, rc_.trainer.batch_size, rc_.data));
}

double Trainer::current_lr(double base) const {
  int64_t k = epoch_ / rc_.trainer.lr_decay_every_epochs;
  return base * std::pow(rc_.trainer.lr_decay, double(k));
}

losses::LossReport Trainer::train_step(const data::TrainBatch& batch) {
  check(!batch.degraded.empty() &&
            batch.degraded.size() == batch.target.size(),
        "train_step: malformed batch");
  const int64_t b = int64_t(batch.degraded.size());
  const double inv_b = 1.0 / double(b);
  losses::LossWeights weights = rc_.losses.weights;
  if (step_ < rc_.trainer.warmup_steps) weights.gamma = 0.0;
  const bool adversarial = weights.gamma > 0.0 || weights.beta > 0.0;

  // generator forwards are shared between the two optimization steps; the
  // discriminator step sees them detached
  std::vector<Tensor> est, target_t;
  for (int64_t i = 0; i < b; i++) {
    est.push_back(gen_->forward_t(batch.degraded[size_t(i)]));
    target_t.push_back(Tensor::from_data(
        {int64_t(batch.target[size_t(i)].size())},
        std::vector<double>(batch.target[size_t(i)].begin(),
                            batch.target[size_t(i)].end())));
  }

  losses::LossReport rep;

  if (adversarial) {
    store_.zero_grads();
    Tensor l_disc = Tensor::scalar(0.0);
    for (int64_t i = 0; i < b; i++) {
      auto real_outs = disc_->ensemble_forward(target_t[size_t(i)], true);
      auto fake_outs =
          disc_->ensemble_forward(est[size_t(i)].detach(), true);
      l_disc = ag::add(l_disc, losses::lsgan_disc_loss(real_outs, fake_outs));
    }
    l_disc = ag::mul_scalar(l_disc, inv_b);
    l_disc.backward();
    clip_grad_norm(disc_params_, rc_.trainer.grad_clip_norm);
    opt_disc_.step(disc_params_, current_lr(rc_.trainer.disc_lr),
                   rc_.trainer.weight_decay);
    rep.l_disc = l_disc.item();
  }

  store_.zero_grads();
  Tensor l_rec = Tensor::scalar(0.0);
  Tensor l_fm = Tensor::scalar(0.0);
  Tensor l_gan = Tensor::scalar(0.0);
  for (int64_t i = 0; i < b; i++) {
    l_rec = ag::add(l_rec, losses::multires_rec_loss(
                               est[size_t(i)], target_t[size_t(i)],
                               rc_.losses.rec_windows, rc_.losses.rec_normalized,
                               rc_.generator.stft.sample_rate));
    if (adversarial) {
      auto fake_outs = disc_->ensemble_forward(est[size_t(i)], false);
      auto real_outs = disc_->ensemble_forward(target_t[size_t(i)], false);
      l_fm = ag::add(l_fm, losses::feature_matching_loss(fake_outs, real_outs));
      l_gan = ag::add(l_gan, losses::lsgan_gen_loss(fake_outs));
    }
  }
  l_rec = ag::mul_scalar(l_rec, inv_b);
  l_fm = ag::mul_scalar(l_fm, inv_b);
  l_gan = ag::mul_scalar(l_gan, inv_b);
  Tensor total = losses::generator_total(l_rec, l_fm, l_gan, weights);
  total.backward();
  clip_grad_norm(gen_params_, rc_.trainer.grad_clip_norm);
  opt_gen_.step(gen_params_, current_lr(rc_.trainer.gen_lr),
                rc_.trainer.weight_decay);

  rep.l_rec = l_rec.item();
  rep.l_fm = l_fm.item();
  rep.l_gan = l_gan.item();
  rep.l_total = total.item();
  step_++;

  if (!std::isfinite(rep.l_total) || !std::isfinite(rep.l_disc)) {
    json diag = {{"step", step_},       {"l_rec", rep.l_rec},
                 {"l_fm", rep.l_fm},    {"l_gan", rep.l_gan},
                 {"l_disc", rep.l_disc}, {"epoch", epoch_}};
    std::ofstream df(fs::path(run_dir_) / "diagnostic.json");
    df << diag.dump(2) << "\n";
    throw std::runtime_error("non-finite loss at step " +
                             std::to_string(step_) +
                             "; diagnostic snapshot written");
  }
  return rep;
}

double Trainer::validation_loss() {
  // values only: freeze requires_grad so no graphs are recorded
  gen_->set_trainable(false);
  disc_->set_trainable(false);
  double acc = 0.0;
  const auto& w = rc_.losses.weights;
  for (const auto& batch : val_set_) {
    for (size_t i = 0; i < batch.degraded.size(); i++) {
      Tensor est = gen_->forward_t(batch.degraded[i]);
      Tensor tgt = Tensor::from_data(
          {int64_t(batch.target[i].size())},
          std::vector<double>(batch.target[i].begin(), batch.target[i].end()));
      double item = w.alpha * losses::multires_rec_loss(
                                  est, tgt, rc_.losses.rec_windows,
                                  rc_.losses.rec_normalized,
                                  rc_.generator.stft.sample_rate)
                                  .item();
      if (w.beta > 0.0) {
        auto fake_outs = disc_->ensemble_forward(est, false);
        auto real_outs = disc_->ensemble_forward(tgt, false);
        item += w.beta *
                losses::feature_matching_loss(fake_outs, real_outs).item();
      }
      acc += item / double(batch.degraded.size());
    }
  }
  gen_->set_trainable(true);
  disc_->set_trainable(true);
  return acc / double(val_set_.size());
}

void Trainer::log_step(const losses::LossReport& rep) {
  std::ofstream lf(fs::path(run_dir_) / "logs" / "metrics.jsonl",
                   std::ios::app);
  json line = {{"step", step_},
               {"l_rec", rep.l_rec},
               {"l_fm", rep.l_fm},
               {"l_gan", rep.l_gan},
               {"l_disc", rep.l_disc},
               {"lr", current_lr(rc_.trainer.gen_lr)}};
  lf << line.dump() << "\n";
}

void Trainer::save_checkpoint(const std::string& dir) const {
  nn::checkpoint_save(store_, dir, cfg::run_config_to_json(rc_));

  // full-precision training state for exact resume
  json ts = {{"epoch", epoch_},
             {"step", step_},
             {"best_val", best_val_},
             {"stale_epochs", stale_epochs_},
             {"adam_t_gen", opt_gen_.t()},
             {"adam_t_disc", opt_disc_.t()},
             {"data_rng", data_rng_.serialize()}};
  std::ofstream tf(fs::path(dir) / "train_state.json");
  tf << ts.dump(2) << "\n";

  std::ofstream sf(fs::path(dir) / "state.bin", std::ios::binary);
  auto dump_group = [&](const std::vector<Tensor>& params, const AdamW& opt) {
    for (size_t i = 0; i < params.size(); i++) {
      const Tensor& p = params[i];
      sf.write(reinterpret_cast<const char*>(p.data()),
               std::streamsize(p.numel() * 8));
      const auto& m = const_cast<AdamW&>(opt).moments_m()[i];
      const auto& v = const_cast<AdamW&>(opt).moments_v()[i];
      sf.write(reinterpret_cast<const char*>(m.data()),
               std::streamsize(m.size() * 8));
      sf.write(reinterpret_cast<const char*>(v.data()),
               std::streamsize(v.size() * 8));
    }
  };
  dump_group(gen_params_, opt_gen_);
  dump_group(disc_params_, opt_disc_);
  check(sf.good(), "failed to write state.bin in " + dir);
}

void Trainer::load_train_state(const std::string& dir) {
  std::ifstream tf(fs::path(dir) / "train_state.json");
  check(tf.good(), "missing train_state.json in " + dir);
  json ts = json::parse(tf);
  epoch_ = ts.at("epoch").get<int64_t>();
  step_ = ts.at("step").get<int64_t>();
  best_val_ = ts.at("best_val").get<double>();
  stale_epochs_ = ts.at("stale_epochs").get<int64_t>();
  opt_gen_.set_t(ts.at("adam_t_gen").get<int64_t>());
  opt_disc_.set_t(ts.at("adam_t_disc").get<int64_t>());
  data_rng_.deserialize(ts.at("data_rng").get<std::string>());

  std::ifstream sf(fs::path(dir) / "state.bin", std::ios::binary);
  check(sf.good(), "missing state.bin in " + dir);
  auto load_group = [&](std::vector<Tensor>& params, AdamW& opt) {
    for (size_t i = 0; i < params.size(); i++) {
      Tensor& p = params[i];
      sf.read(reinterpret_cast<char*>(p.data()),
              std::streamsize(p.numel() * 8));
      auto& m = opt.moments_m()[i];
      auto& v = opt.moments_v()[i];
      sf.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * 8));
      sf.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * 8));
    }
  };
  load_group(gen_params_, opt_gen_);
  load_group(disc_params_, opt_disc_);
  check(sf.good(), "truncated state.bin in " + dir);

  // restore non-trainable state (power-iteration vectors) from the container
  nn::ParameterStore loaded;
  nn::checkpoint_load(dir, loaded);
  for (const auto& name : store_.names()) {
    if (store_.is_param(name)) continue;
    if (loaded.has(name)) store_.get(name).values() = loaded.get(name).values();
  }
}

std::unique_ptr<Trainer> Trainer::resume(const std::string& run_dir,
                                         data::StemLibrary lib) {
  auto rc = cfg::run_config_from_file(
      (fs::path(run_dir) / "config.json").string());
  std::unique_ptr<Trainer> t(
      new Trainer(rc, std::move(lib), run_dir, /*resuming=*/true));
  t->load_train_state((fs::path(run_dir) / "checkpoints" / "last").string());
  return t;
}

std::string Trainer::run() {
  fs::path best_dir = fs::path(run_dir_) / "checkpoints" / "best";
  fs::path last_dir = fs::path(run_dir_) / "checkpoints" / "last";
  for (; epoch_ < rc_.trainer.epochs; ) {
    for (int64_t s = 0; s < rc_.trainer.steps_per_epoch; s++) {
      auto batch = data::make_batch(lib_, data_rng_, rc_.trainer.batch_size,
                                    rc_.data);
      auto rep = train_step(batch);
      log_step(rep);
    }
    double val = validation_loss();
    epoch_++;
    if (val < best_val_) {
      best_val_ = val;
      stale_epochs_ = 0;
      save_checkpoint(best_dir.string());
    } else {
      stale_epochs_++;
    }
    save_checkpoint(last_dir.string());
    if (stale_epochs_ >= rc_.trainer.early_stop_patience) break;
  }
  if (!fs::exists(best_dir)) save_checkpoint(best_dir.string());
  return best_dir.string();
}

}  // namespace apollo::train
