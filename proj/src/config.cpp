// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace apollo::cfg {

using nlohmann::json;

void TrainConfig::validate() const {
  check(gen_lr > 0 && disc_lr > 0, "learning rates must be positive");
  check(weight_decay >= 0, "weight_decay must be nonnegative");
  check(lr_decay > 0 && lr_decay <= 1, "lr_decay must be in (0, 1]");
  check(lr_decay_every_epochs >= 1, "lr_decay_every_epochs must be >= 1");
  check(grad_clip_norm > 0, "grad_clip_norm must be positive");
  check(early_stop_patience >= 1, "early_stop_patience must be >= 1");
  check(batch_size >= 1 && steps_per_epoch >= 1 && epochs >= 1,
        "batch/steps/epochs must be >= 1");
  check(val_batches >= 1, "val_batches must be >= 1");
  check(warmup_steps >= 0, "warmup_steps must be >= 0");
}

void RunConfig::validate() const {
  generator.validate();
  discriminator.validate();
  losses.weights.validate();
  check(!losses.rec_windows.empty(), "losses.rec_windows must be non-empty");
  data.validate();
  trainer.validate();
  check(discriminator.sample_rate == generator.stft.sample_rate,
        "discriminator and generator sample rates must match");
  check(data.sample_rate == generator.stft.sample_rate,
        "data and generator sample rates must match");
}

RunConfig default_run_config() { return RunConfig{}; }

namespace {

// every key the schema accepts, per section
void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument("unknown config key '" +
                                  (path.empty() ? it.key() : path + "." + it.key()) + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  RunConfig rc;
  reject_unknown(j, {"stft", "generator", "discriminator", "losses", "data",
                     "trainer"},
                 "");

  if (j.contains("stft")) {
    const json& s = j["stft"];
    reject_unknown(s, {"sample_rate", "window_len", "hop_len", "window",
                       "fft_len"},
                   "stft");
    take(s, "sample_rate", rc.generator.stft.sample_rate);
    take(s, "window_len", rc.generator.stft.window_len);
    take(s, "hop_len", rc.generator.stft.hop_len);
    take(s, "window", rc.generator.stft.window);
    if (s.contains("fft_len"))
      rc.generator.stft.fft_len = s.at("fft_len").get<int64_t>();
    else
      rc.generator.stft.fft_len = rc.generator.stft.window_len;
  }
  if (j.contains("generator")) {
    const json& g = j["generator"];
    reject_unknown(g, {"bandwidth_hz", "feature_dim", "depth", "causal",
                       "eps_mag", "tcn", "attention"},
                   "generator");
    take(g, "bandwidth_hz", rc.generator.bandwidth_hz);
    take(g, "feature_dim", rc.generator.feature_dim);
    take(g, "depth", rc.generator.depth);
    take(g, "causal", rc.generator.causal);
    take(g, "eps_mag", rc.generator.eps_mag);
    if (g.contains("tcn")) {
      const json& t = g["tcn"];
      reject_unknown(t, {"blocks", "layers_per_block", "kernel", "hidden_mult",
                         "dilations"},
                     "generator.tcn");
      take(t, "blocks", rc.generator.tcn.blocks);
      take(t, "layers_per_block", rc.generator.tcn.layers_per_block);
      take(t, "kernel", rc.generator.tcn.kernel);
      take(t, "hidden_mult", rc.generator.tcn.hidden_mult);
      take(t, "dilations", rc.generator.tcn.dilations);
    }
    if (g.contains("attention")) {
      const json& a = g["attention"];
      reject_unknown(a, {"heads", "ffn_mult"}, "generator.attention");
      take(a, "heads", rc.generator.attention.heads);
      take(a, "ffn_mult", rc.generator.attention.ffn_mult);
    }
  }
  if (j.contains("discriminator")) {
    const json& d = j["discriminator"];
    reject_unknown(d, {"window_sizes", "base_channels", "n_layers"},
                   "discriminator");
    take(d, "window_sizes", rc.discriminator.window_sizes);
    take(d, "base_channels", rc.discriminator.base_channels);
    take(d, "n_layers", rc.discriminator.n_layers);
  }
  if (j.contains("losses")) {
    const json& l = j["losses"];
    reject_unknown(l, {"alpha", "beta", "gamma", "rec_windows",
                       "rec_normalized"},
                   "losses");
    take(l, "alpha", rc.losses.weights.alpha);
    take(l, "beta", rc.losses.weights.beta);
    take(l, "gamma", rc.losses.weights.gamma);
    take(l, "rec_windows", rc.losses.rec_windows);
    take(l, "rec_normalized", rc.losses.rec_normalized);
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    reject_unknown(d, {"clip_seconds", "min_stems", "max_stems", "gain_db_lo",
                       "gain_db_hi", "bitrates", "degrade_method",
                       "external_codec_cmd", "codec_timeout_s"},
                   "data");
    take(d, "clip_seconds", rc.data.clip_seconds);
    take(d, "min_stems", rc.data.min_stems);
    take(d, "max_stems", rc.data.max_stems);
    take(d, "gain_db_lo", rc.data.gain_db_lo);
    take(d, "gain_db_hi", rc.data.gain_db_hi);
    take(d, "bitrates", rc.data.bitrates);
    take(d, "degrade_method", rc.data.degrade_method);
    take(d, "external_codec_cmd", rc.data.external_codec_cmd);
    take(d, "codec_timeout_s", rc.data.codec_timeout_s);
  }
  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    reject_unknown(t, {"gen_lr", "disc_lr", "weight_decay", "lr_decay",
                       "lr_decay_every_epochs", "grad_clip_norm",
                       "early_stop_patience", "batch_size", "steps_per_epoch",
                       "epochs", "seed", "val_batches", "warmup_steps"},
                   "trainer");
    take(t, "gen_lr", rc.trainer.gen_lr);
    take(t, "disc_lr", rc.trainer.disc_lr);
    take(t, "weight_decay", rc.trainer.weight_decay);
    take(t, "lr_decay", rc.trainer.lr_decay);
    take(t, "lr_decay_every_epochs", rc.trainer.lr_decay_every_epochs);
    take(t, "grad_clip_norm", rc.trainer.grad_clip_norm);
    take(t, "early_stop_patience", rc.trainer.early_stop_patience);
    take(t, "batch_size", rc.trainer.batch_size);
    take(t, "steps_per_epoch", rc.trainer.steps_per_epoch);
    take(t, "epochs", rc.trainer.epochs);
    take(t, "seed", rc.trainer.seed);
    take(t, "val_batches", rc.trainer.val_batches);
    take(t, "warmup_steps", rc.trainer.warmup_steps);
  }

  rc.discriminator.sample_rate = rc.generator.stft.sample_rate;
  rc.data.sample_rate = rc.generator.stft.sample_rate;
  rc.validate();
  return rc;
}

RunConfig run_config_from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good())
    throw std::invalid_argument("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

std::string run_config_to_json(const RunConfig& rc) {
  json j;
  j["stft"] = {{"sample_rate", rc.generator.stft.sample_rate},
               {"window_len", rc.generator.stft.window_len},
               {"hop_len", rc.generator.stft.hop_len},
               {"window", rc.generator.stft.window},
               {"fft_len", rc.generator.stft.fft_len}};
  j["generator"] = {{"bandwidth_hz", rc.generator.bandwidth_hz},
                    {"feature_dim", rc.generator.feature_dim},
                    {"depth", rc.generator.depth},
                    {"causal", rc.generator.causal},
                    {"eps_mag", rc.generator.eps_mag},
                    {"tcn",
                     {{"blocks", rc.generator.tcn.blocks},
                      {"layers_per_block", rc.generator.tcn.layers_per_block},
                      {"kernel", rc.generator.tcn.kernel},
                      {"hidden_mult", rc.generator.tcn.hidden_mult},
                      {"dilations", rc.generator.tcn.dilations}}},
                    {"attention",
                     {{"heads", rc.generator.attention.heads},
                      {"ffn_mult", rc.generator.attention.ffn_mult}}}};
  j["discriminator"] = {{"window_sizes", rc.discriminator.window_sizes},
                        {"base_channels", rc.discriminator.base_channels},
                        {"n_layers", rc.discriminator.n_layers}};
  j["losses"] = {{"alpha", rc.losses.weights.alpha},
                 {"beta", rc.losses.weights.beta},
                 {"gamma", rc.losses.weights.gamma},
                 {"rec_windows", rc.losses.rec_windows},
                 {"rec_normalized", rc.losses.rec_normalized}};
  j["data"] = {{"clip_seconds", rc.data.clip_seconds},
               {"min_stems", rc.data.min_stems},
               {"max_stems", rc.data.max_stems},
               {"gain_db_lo", rc.data.gain_db_lo},
               {"gain_db_hi", rc.data.gain_db_hi},
               {"bitrates", rc.data.bitrates},
               {"degrade_method", rc.data.degrade_method},
               {"external_codec_cmd", rc.data.external_codec_cmd},
               {"codec_timeout_s", rc.data.codec_timeout_s}};
  j["trainer"] = {{"gen_lr", rc.trainer.gen_lr},
                  {"disc_lr", rc.trainer.disc_lr},
                  {"weight_decay", rc.trainer.weight_decay},
                  {"lr_decay", rc.trainer.lr_decay},
                  {"lr_decay_every_epochs", rc.trainer.lr_decay_every_epochs},
                  {"grad_clip_norm", rc.trainer.grad_clip_norm},
                  {"early_stop_patience", rc.trainer.early_stop_patience},
                  {"batch_size", rc.trainer.batch_size},
                  {"steps_per_epoch", rc.trainer.steps_per_epoch},
                  {"epochs", rc.trainer.epochs},
                  {"seed", rc.trainer.seed},
                  {"val_batches", rc.trainer.val_batches},
                  {"warmup_steps", rc.trainer.warmup_steps}};
  return j.dump(2);
}

}  // namespace apollo::cfg
