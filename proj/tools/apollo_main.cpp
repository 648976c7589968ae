// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "apollo/config.hpp"
#include "apollo/data.hpp"
#include "apollo/generator.hpp"
#include "apollo/metrics.hpp"
#include "apollo/params.hpp"
#include "apollo/trainer.hpp"
#include "apollo/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace apollo;

namespace {

struct LoadedModel {
  nn::ParameterStore store;
  cfg::RunConfig rc;
  std::optional<gen::Generator> generator;
};

LoadedModel load_model(const std::string& checkpoint_dir) {
  LoadedModel m;
  std::string config_json = nn::checkpoint_load(checkpoint_dir, m.store);
  m.rc = cfg::run_config_from_json(config_json);
  m.generator = gen::Generator::attach(m.rc.generator, m.store);
  m.generator->set_trainable(false);
  return m;
}

std::vector<double> restore_channel(const gen::Generator& g,
                                    const std::vector<double>& ch,
                                    bool streaming, int64_t chunk_ms) {
  if (!streaming) return g.forward(ch);
  int64_t chunk = std::max<int64_t>(
      1, g.config().stft.sample_rate * chunk_ms / 1000);
  auto session = g.open_stream();
  std::vector<double> out;
  for (int64_t start = 0; start < int64_t(ch.size()); start += chunk) {
    int64_t end = std::min<int64_t>(start + chunk, int64_t(ch.size()));
    auto part = session.push(
        std::span<const double>(ch.data() + start, size_t(end - start)));
    out.insert(out.end(), part.begin(), part.end());
  }
  auto tail = session.flush();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

int cmd_restore(const std::string& input, const std::string& output,
                const std::string& checkpoint, bool streaming,
                int64_t chunk_ms) {
  auto model = load_model(checkpoint);
  auto audio = wav::read(input);
  if (audio.sample_rate != model.rc.generator.stft.sample_rate)
    throw std::runtime_error(
        "input sample rate " + std::to_string(audio.sample_rate) +
        " does not match the checkpoint (" +
        std::to_string(model.rc.generator.stft.sample_rate) +
        "); resample the file first");
  if (streaming && !model.rc.generator.causal)
    throw std::runtime_error(
        "checkpoint was not trained in causal mode; --streaming unavailable");
  wav::WavData out = audio;
  for (auto& ch : out.channels)
    ch = restore_channel(*model.generator, ch, streaming, chunk_ms);
  wav::write(output, out);
  std::cout << "restored " << audio.n_channels() << " channel(s), "
            << audio.n_samples() << " samples -> " << output << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_manifest,
              const std::string& run_dir, bool resume) {
  auto lib = data::load_library(data_manifest);
  std::unique_ptr<train::Trainer> trainer;
  if (resume) {
    trainer = train::Trainer::resume(run_dir, std::move(lib));
  } else {
    auto rc = cfg::run_config_from_file(config_path);
    trainer = std::make_unique<train::Trainer>(rc, std::move(lib), run_dir);
  }
  std::string best = trainer->run();
  std::cout << "best checkpoint: " << best << "\n";
  return 0;
}

struct EvalRow {
  int64_t bitrate = 0;
  metrics::MetricReport degraded;
  metrics::MetricReport restored;
};

void write_eval_report(const std::vector<EvalRow>& rows,
                       const std::string& out_dir) {
  fs::create_directories(out_dir);
  json j = json::array();
  std::ostringstream csv;
  csv << "bitrate,mean_si_snr_degraded,mean_sdr_degraded,"
         "mean_si_snr_restored,mean_sdr_restored,n_files\n";
  for (const auto& row : rows) {
    json e;
    e["bitrate"] = row.bitrate;
    e["degraded"] = json::parse(metrics::report_to_json(row.degraded));
    e["restored"] = json::parse(metrics::report_to_json(row.restored));
    j.push_back(e);
    csv << row.bitrate << ","
        << (row.degraded.mean_si_snr ? std::to_string(*row.degraded.mean_si_snr) : "")
        << ","
        << (row.degraded.mean_sdr ? std::to_string(*row.degraded.mean_sdr) : "")
        << ","
        << (row.restored.mean_si_snr ? std::to_string(*row.restored.mean_si_snr) : "")
        << ","
        << (row.restored.mean_sdr ? std::to_string(*row.restored.mean_sdr) : "")
        << "," << row.degraded.files.size() << "\n";
  }
  std::ofstream jf(fs::path(out_dir) / "report.json");
  jf << j.dump(2) << "\n";
  std::ofstream cf(fs::path(out_dir) / "report.csv");
  cf << csv.str();
  std::cout << csv.str();
}

int cmd_evaluate(const std::string& checkpoint, bool passthrough,
                 const std::string& pairs_manifest,
                 const std::string& targets_manifest, bool on_the_fly,
                 std::vector<int64_t> bitrates, const std::string& out_dir,
                 uint64_t seed, const std::string& export_dir,
                 const std::string& method, const std::string& codec_cmd) {
  std::optional<LoadedModel> model;
  if (!passthrough) {
    if (checkpoint.empty())
      throw std::invalid_argument("provide --checkpoint or --passthrough");
    model = load_model(checkpoint);
  }
  auto run_model = [&](const std::vector<double>& x) {
    return model ? model->generator->forward(x) : x;
  };
  int64_t sr = model ? model->rc.generator.stft.sample_rate : 44100;

  std::vector<EvalRow> rows;
  if (!pairs_manifest.empty()) {
    std::ifstream f(pairs_manifest);
    if (!f.good())
      throw std::runtime_error("cannot open pairs manifest: " + pairs_manifest);
    json pairs = json::parse(f);
    EvalRow row;
    for (const auto& p : pairs) {
      auto deg = wav::read(p.at("degraded").get<std::string>()).mono_mix();
      auto tgt = wav::read(p.at("target").get<std::string>()).mono_mix();
      check(deg.size() == tgt.size(), "pair length mismatch");
      auto rest = run_model(deg);
      std::string name = fs::path(p.at("degraded").get<std::string>())
                             .filename()
                             .string();
      row.degraded.files.push_back(
          {name, metrics::si_snr(deg, tgt), metrics::sdr(deg, tgt)});
      row.restored.files.push_back(
          {name, metrics::si_snr(rest, tgt), metrics::sdr(rest, tgt)});
    }
    row.degraded.finalize();
    row.restored.finalize();
    rows.push_back(std::move(row));
  } else if (on_the_fly) {
    if (targets_manifest.empty())
      throw std::invalid_argument("--degrade-on-the-fly needs --targets");
    std::ifstream f(targets_manifest);
    if (!f.good())
      throw std::runtime_error("cannot open targets manifest: " +
                               targets_manifest);
    json targets = json::parse(f);
    data::DataConfig dcfg;
    dcfg.sample_rate = sr;
    dcfg.bitrates = bitrates;
    dcfg.degrade_method = method;
    dcfg.external_codec_cmd = codec_cmd;
    int64_t pair_idx = 0;
    for (int64_t bitrate : bitrates) {
      EvalRow row;
      row.bitrate = bitrate;
      for (size_t i = 0; i < targets.size(); i++) {
        std::string path = targets.at(i).get<std::string>();
        auto audio = wav::read(path);
        check(audio.sample_rate == sr,
              "sample rate mismatch in " + path);
        auto tgt = audio.mono_mix();
        Rng rng(seed ^ (uint64_t(bitrate) * 0x9e3779b9ULL) ^ uint64_t(i));
        auto deg = data::degrade(tgt, bitrate, dcfg, rng);
        auto rest = run_model(deg);
        std::string name = fs::path(path).filename().string();
        row.degraded.files.push_back(
            {name, metrics::si_snr(deg, tgt), metrics::sdr(deg, tgt)});
        row.restored.files.push_back(
            {name, metrics::si_snr(rest, tgt), metrics::sdr(rest, tgt)});
        if (!export_dir.empty()) {
          // paired WAVs laid out for an external perceptual-quality tool
          fs::create_directories(export_dir);
          wav::WavData w;
          w.sample_rate = sr;
          w.format = wav::SampleFormat::pcm16;
          w.channels = {rest};
          wav::write((fs::path(export_dir) /
                      ("est_" + std::to_string(pair_idx) + ".wav"))
                         .string(),
                     w);
          w.channels = {tgt};
          wav::write((fs::path(export_dir) /
                      ("ref_" + std::to_string(pair_idx) + ".wav"))
                         .string(),
                     w);
          pair_idx++;
        }
      }
      row.degraded.finalize();
      row.restored.finalize();
      rows.push_back(std::move(row));
    }
  } else {
    throw std::invalid_argument("provide --pairs or --degrade-on-the-fly");
  }
  write_eval_report(rows, out_dir);
  return 0;
}

int cmd_degrade(const std::string& input, const std::string& output,
                int64_t bitrate, const std::string& method,
                const std::string& codec_cmd, uint64_t seed) {
  auto audio = wav::read(input);
  data::DataConfig dcfg;
  dcfg.sample_rate = audio.sample_rate;
  dcfg.degrade_method = method;
  dcfg.external_codec_cmd = codec_cmd;
  if (std::find(dcfg.bitrates.begin(), dcfg.bitrates.end(), bitrate) ==
      dcfg.bitrates.end())
    dcfg.bitrates.push_back(bitrate);
  for (size_t c = 0; c < audio.channels.size(); c++) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (c + 1)));
    audio.channels[c] = data::degrade(audio.channels[c], bitrate, dcfg, rng);
  }
  wav::write(output, audio);
  std::cout << "degraded at " << bitrate << " bps (" << method << ") -> "
            << output << "\n";
  return 0;
}

int cmd_bench(const std::string& checkpoint, const std::string& config_path,
              int64_t iters, int64_t warmup, double clip_seconds,
              uint64_t seed, const std::string& output) {
  nn::ParameterStore store;
  cfg::RunConfig rc;
  std::optional<gen::Generator> g;
  if (!checkpoint.empty()) {
    std::string config_json = nn::checkpoint_load(checkpoint, store);
    rc = cfg::run_config_from_json(config_json);
    g = gen::Generator::attach(rc.generator, store);
  } else {
    rc = config_path.empty() ? cfg::default_run_config()
                             : cfg::run_config_from_file(config_path);
    Rng init_rng(seed);
    g = gen::Generator::create(rc.generator, store, init_rng);
  }
  g->set_trainable(false);

  int64_t len = int64_t(clip_seconds * double(rc.generator.stft.sample_rate));
  Rng rng(seed ^ 0xbe9cULL);
  std::vector<double> clip(static_cast<size_t>(len));
  for (double& v : clip) v = 0.1 * rng.normal();

  auto report = metrics::bench_rtf([&]() { (void)g->forward(clip); }, iters,
                                   warmup, clip_seconds);
  double params_m = double(g->param_count()) / 1e6;
  double rtf_ms = report.mean_ms / clip_seconds;
  json j = {{"params_m", params_m},
            {"rtf_ms_per_s", rtf_ms},
            {"mean_ms", report.mean_ms},
            {"p95_ms", report.p95_ms},
            {"iters", report.iters},
            {"clip_seconds", report.clip_seconds}};
  std::cout << "Params (M): " << params_m << "\n"
            << "RTF (ms): " << rtf_ms << " per second of audio (mean), p95 "
            << report.p95_ms / clip_seconds << "\n"
            << "iters: " << iters << ", clip: " << clip_seconds << " s\n";
  if (!output.empty()) {
    std::ofstream of(output);
    of << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_scan(const std::string& root, const std::string& output) {
  std::string manifest = data::scan_corpus(root);
  std::ofstream f(output);
  if (!f.good()) throw std::runtime_error("cannot write " + output);
  f << manifest << "\n";
  std::cout << "wrote " << json::parse(manifest).size() << " stems to "
            << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"band-split audio restoration toolkit"};
  app.require_subcommand(1);

  // restore
  auto* restore = app.add_subcommand("restore", "run the model on a WAV file");
  std::string r_in, r_out, r_ckpt;
  bool r_stream = false;
  int64_t r_chunk_ms = 10;
  restore->add_option("--input", r_in)->required();
  restore->add_option("--output", r_out)->required();
  restore->add_option("--checkpoint", r_ckpt)->required();
  restore->add_flag("--streaming", r_stream);
  restore->add_option("--chunk-ms", r_chunk_ms);

  // train
  auto* trainc = app.add_subcommand("train", "train from a corpus manifest");
  std::string t_cfg, t_data, t_rundir;
  bool t_resume = false;
  trainc->add_option("--config", t_cfg);
  trainc->add_option("--data", t_data)->required();
  trainc->add_option("--run-dir", t_rundir)->required();
  trainc->add_flag("--resume", t_resume);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "metric sweep over clips");
  std::string e_ckpt, e_pairs, e_targets, e_outdir = "eval_out", e_export;
  std::string e_method = "surrogate", e_codec;
  bool e_pass = false, e_fly = false;
  std::vector<int64_t> e_bitrates = {24000, 32000, 48000, 64000, 96000, 128000};
  uint64_t e_seed = 0;
  eval->add_option("--checkpoint", e_ckpt);
  eval->add_flag("--passthrough", e_pass);
  eval->add_option("--pairs", e_pairs);
  eval->add_option("--targets", e_targets);
  eval->add_flag("--degrade-on-the-fly", e_fly);
  eval->add_option("--bitrates", e_bitrates)->delimiter(',');
  eval->add_option("--output-dir", e_outdir);
  eval->add_option("--seed", e_seed);
  eval->add_option("--export-pairs", e_export);
  eval->add_option("--method", e_method)
      ->check(CLI::IsMember({"surrogate", "external"}));
  eval->add_option("--codec-cmd", e_codec);

  // degrade
  auto* degr = app.add_subcommand("degrade", "apply codec-style degradation");
  std::string d_in, d_out, d_method = "surrogate", d_codec;
  int64_t d_bitrate = 0;
  uint64_t d_seed = 0;
  degr->add_option("--input", d_in)->required();
  degr->add_option("--output", d_out)->required();
  degr->add_option("--bitrate", d_bitrate)->required();
  degr->add_option("--method", d_method)
      ->check(CLI::IsMember({"surrogate", "external"}));
  degr->add_option("--codec-cmd", d_codec);
  degr->add_option("--seed", d_seed);

  // bench
  auto* bench = app.add_subcommand("bench", "wall-clock benchmark");
  std::string b_ckpt, b_cfg, b_out;
  int64_t b_iters = 1000, b_warmup = 10;
  double b_clip = 1.0;
  uint64_t b_seed = 0;
  bench->add_option("--checkpoint", b_ckpt);
  bench->add_option("--config", b_cfg);
  bench->add_option("--iters", b_iters);
  bench->add_option("--warmup", b_warmup);
  bench->add_option("--clip-seconds", b_clip);
  bench->add_option("--seed", b_seed);
  bench->add_option("--output", b_out);

  // scan
  auto* scan = app.add_subcommand("scan", "index a stem corpus into a manifest");
  std::string s_root, s_out;
  scan->add_option("--root", s_root)->required();
  scan->add_option("--output", s_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (restore->parsed())
      return cmd_restore(r_in, r_out, r_ckpt, r_stream, r_chunk_ms);
    if (trainc->parsed()) {
      if (!t_resume && t_cfg.empty())
        throw std::invalid_argument("train needs --config (or --resume)");
      return cmd_train(t_cfg, t_data, t_rundir, t_resume);
    }
    if (eval->parsed())
      return cmd_evaluate(e_ckpt, e_pass, e_pairs, e_targets, e_fly,
                          e_bitrates, e_outdir, e_seed, e_export, e_method,
                          e_codec);
    if (degr->parsed())
      return cmd_degrade(d_in, d_out, d_bitrate, d_method, d_codec, d_seed);
    if (bench->parsed())
      return cmd_bench(b_ckpt, b_cfg, b_iters, b_warmup, b_clip, b_seed, b_out);
    if (scan->parsed()) return cmd_scan(s_root, s_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
