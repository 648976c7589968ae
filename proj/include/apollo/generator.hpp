// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apollo/dsp.hpp"
#include "apollo/nn.hpp"
#include "apollo/params.hpp"
#include "apollo/signal_ops.hpp"

namespace apollo::gen {

using ag::Tensor;

struct TcnConfig {
  int64_t blocks = 3;
  int64_t layers_per_block = 3;
  int64_t kernel = 3;
  int64_t hidden_mult = 4;
  std::vector<int64_t> dilations = {1, 2, 4};  // one per block
};

struct AttnConfig {
  int64_t heads = 8;
  int64_t ffn_mult = 4;
};

struct GeneratorConfig {
  dsp::StftConfig stft;
  double bandwidth_hz = 160.0;
  int64_t feature_dim = 256;  // N
  int64_t depth = 6;          // stacked band-sequence modules
  TcnConfig tcn;
  AttnConfig attention;
  bool causal = false;
  double eps_mag = 1e-8;  // floor for the log-magnitude channel

  void validate() const;
};

// gain-shape features of one sub-band: (3, M, T) with channels
// (re/|x|, im/|x|, log|x|); zero-magnitude bins map to (0, 0, log eps).
Tensor gain_shape(std::span<const dsp::cplx> band, int64_t m, int64_t t,
                  double eps_mag = 1e-8);

class Generator;

// Incremental causal inference: push audio in arbitrary chunks, pull
// restored audio with window_len algorithmic latency.
class StreamingSession {
 public:
  explicit StreamingSession(const Generator& g);
  std::vector<double> push(std::span<const double> chunk);
  std::vector<double> flush();
  void reset();

 private:
  std::vector<double> process_ready(bool flushing);
  void run_frame(std::span<const double> padded_frame);

  const Generator& gen_;
  std::vector<double> input_;
  std::vector<double> acc_, env_;   // overlap-add tails, padded coords
  int64_t acc_base_ = 0;            // padded index of acc_[0]
  int64_t next_frame_ = 0;
  int64_t emitted_ = 0;             // original samples already emitted
  bool flushed_ = false;
  // per (module, block) depthwise-conv context: (K, hidden, (k-1)*dil)
  std::vector<std::vector<std::vector<double>>> ctx_;
};

class Generator {
 public:
  static Generator create(const GeneratorConfig& cfg, nn::ParameterStore& store,
                          Rng& rng, const std::string& prefix = "gen/");
  // bind to tensors already present in the store (e.g. from a checkpoint)
  static Generator attach(const GeneratorConfig& cfg, nn::ParameterStore& store,
                          const std::string& prefix = "gen/");

  const GeneratorConfig& config() const { return cfg_; }
  const dsp::BandPlan& band_plan() const { return plan_; }
  const std::string& prefix() const { return prefix_; }
  int64_t param_count() const;
  void set_trainable(bool trainable);

  // stage operations
  Tensor band_encode(const std::vector<Tensor>& gain_shapes) const;
  Tensor bs_module(const Tensor& z, int64_t module_index, bool causal) const;
  Tensor band_decode(const Tensor& q) const;

  // full pass: stft -> split -> gain-shape -> encode -> modules -> decode
  // -> istft; output length equals input length
  Tensor forward_t(std::span<const double> wave) const;
  std::vector<double> forward(std::span<const double> wave) const;

  StreamingSession open_stream() const;

 private:
  friend class StreamingSession;

  struct TcnBlockParams {
    Tensor norm_gain, in_w, in_b, dw_w, dw_b, out_w, out_b;
  };
  struct BsParams {
    Tensor attn_norm;
    nn::AttentionParams attn;
    Tensor ffn_norm, ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    std::vector<TcnBlockParams> tcn;
  };
  struct BandIO {
    Tensor enc_norm, enc_w, enc_b;
    Tensor dec_norm, dec_w, dec_b;
  };

  Generator(GeneratorConfig cfg, nn::ParameterStore* store, std::string prefix);
  void build(Rng* rng);  // create (rng != nullptr) or attach parameters

  GeneratorConfig cfg_;
  dsp::BandPlan plan_;
  nn::ParameterStore* store_ = nullptr;
  std::string prefix_;
  std::vector<BandIO> bands_;
  std::vector<BsParams> modules_;
};

}  // namespace apollo::gen
