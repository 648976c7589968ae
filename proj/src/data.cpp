// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/data.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "apollo/dsp.hpp"
#include "apollo/fft.hpp"
#include "apollo/wav.hpp"

namespace apollo::data {

namespace fs = std::filesystem;
using nlohmann::json;

void DataConfig::validate() const {
  check(clip_seconds > 0, "clip_seconds must be positive");
  check(min_stems >= 1 && max_stems >= min_stems, "bad stem count range");
  check(gain_db_hi >= gain_db_lo, "bad gain range");
  check(!bitrates.empty(), "bitrates must be non-empty");
  check(degrade_method == "surrogate" || degrade_method == "external",
        "degrade_method must be 'surrogate' or 'external'");
  if (degrade_method == "external")
    check(!external_codec_cmd.empty(),
          "external degradation needs external_codec_cmd");
  check(sample_rate > 0, "sample_rate must be positive");
}

std::vector<std::pair<int64_t, int64_t>> detect_activity(
    std::span<const double> wave, int64_t sample_rate, const SadConfig& cfg) {
  int64_t len = int64_t(wave.size());
  int64_t win = std::max<int64_t>(1, int64_t(cfg.window_s * double(sample_rate)));
  int64_t hop = std::max<int64_t>(1, int64_t(cfg.hop_s * double(sample_rate)));
  int64_t gap = int64_t(cfg.merge_gap_s * double(sample_rate));
  if (len == 0) return {};

  std::vector<std::pair<int64_t, double>> rms;  // (start, rms)
  for (int64_t start = 0; start < len; start += hop) {
    int64_t end = std::min(start + win, len);
    double ss = 0.0;
    for (int64_t i = start; i < end; i++) ss += wave[size_t(i)] * wave[size_t(i)];
    rms.emplace_back(start, std::sqrt(ss / double(end - start)));
    if (end == len) break;
  }
  double peak = 0.0;
  for (auto& [s, r] : rms) peak = std::max(peak, r);
  if (peak <= 0.0) return {};
  double thr = peak * std::pow(10.0, cfg.threshold_db / 20.0);

  std::vector<std::pair<int64_t, int64_t>> segs;
  for (auto& [start, r] : rms) {
    if (r <= thr) continue;
    int64_t end = std::min(start + win, len);
    if (!segs.empty() && start - segs.back().second <= gap)
      segs.back().second = std::max(segs.back().second, end);
    else
      segs.emplace_back(start, end);
  }
  return segs;
}

std::string scan_corpus(const std::string& root) {
  check(fs::is_directory(root), "corpus root is not a directory: " + root);
  json manifest = json::array();
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto p = entry.path();
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext != ".wav") continue;
    if (p.stem().string() == "mixture") continue;  // MUSDB mixes are derived
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    fs::path rel = fs::relative(p, root);
    std::string track = rel.begin() != rel.end() ? rel.begin()->string() : "";
    fs::path stem_rel = rel.lexically_relative(track);
    std::string stem = stem_rel.replace_extension("").generic_string();
    json e;
    e["track"] = track;
    e["stem"] = stem.empty() ? p.stem().string() : stem;
    e["path"] = fs::absolute(p).string();
    manifest.push_back(e);
  }
  return manifest.dump(2);
}

StemLibrary load_library(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f.good())
    throw std::runtime_error("cannot open manifest: " + manifest_path);
  json manifest = json::parse(f);
  check(manifest.is_array(), "manifest must be a JSON array");

  StemLibrary lib;
  for (const auto& e : manifest) {
    StemRecord rec;
    rec.track = e.at("track").get<std::string>();
    rec.stem = e.at("stem").get<std::string>();
    rec.path = e.at("path").get<std::string>();
    auto audio = wav::read(rec.path);
    if (lib.stems.empty()) lib.sample_rate = audio.sample_rate;
    check(audio.sample_rate == lib.sample_rate,
          "stem sample rate mismatch in " + rec.path);
    rec.samples = audio.mono_mix();
    rec.active = detect_activity(rec.samples, lib.sample_rate);
    lib.stems.push_back(std::move(rec));
  }
  return lib;
}

std::vector<double> sample_mixture(const StemLibrary& lib, Rng& rng,
                                   const DataConfig& cfg, MixMeta* meta) {
  check(!lib.stems.empty(), "stem library is empty");
  std::vector<int64_t> usable;
  for (int64_t i = 0; i < int64_t(lib.stems.size()); i++)
    if (!lib.stems[size_t(i)].active.empty()) usable.push_back(i);
  check(!usable.empty(), "no active segments anywhere in the library");

  int64_t clip_len = int64_t(cfg.clip_seconds * double(lib.sample_rate));
  int64_t hi = std::min<int64_t>(cfg.max_stems, int64_t(usable.size()));
  int64_t lo = std::min<int64_t>(cfg.min_stems, hi);
  int64_t n_stems = rng.uniform_int(lo, hi);

  // partial Fisher-Yates for distinct stems
  for (int64_t i = 0; i < n_stems; i++) {
    int64_t j = rng.uniform_int(i, int64_t(usable.size()) - 1);
    std::swap(usable[size_t(i)], usable[size_t(j)]);
  }

  std::vector<double> mix(static_cast<size_t>(clip_len), 0.0);
  for (int64_t s = 0; s < n_stems; s++) {
    const StemRecord& rec = lib.stems[size_t(usable[size_t(s)])];
    const auto& segs = rec.active;
    auto [seg_start, seg_end] = segs[size_t(rng.uniform_int(0, int64_t(segs.size()) - 1))];
    int64_t latest = std::max(seg_start, seg_end - clip_len);
    int64_t start = rng.uniform_int(seg_start, latest);
    double gain_db = rng.uniform(cfg.gain_db_lo, cfg.gain_db_hi);
    double g = std::pow(10.0, gain_db / 20.0);
    int64_t avail = int64_t(rec.samples.size()) - start;
    int64_t n = std::min(clip_len, std::max<int64_t>(avail, 0));
    for (int64_t i = 0; i < n; i++)
      mix[size_t(i)] += g * rec.samples[size_t(start + i)];
    if (meta) {
      meta->stems.push_back(rec.track + "/" + rec.stem);
      meta->gains_db.push_back(gain_db);
    }
  }
  return mix;
}

std::vector<double> lowpass_brickwall(std::span<const double> x,
                                      double cutoff_hz, int64_t sample_rate) {
  int64_t n = int64_t(x.size());
  if (n == 0) return {};
  auto spec = fft::rfft(x);
  double bin_hz = double(sample_rate) / double(n);
  for (int64_t k = 0; k < int64_t(spec.size()); k++)
    if (double(k) * bin_hz > cutoff_hz) spec[size_t(k)] = {0.0, 0.0};
  return fft::irfft(spec, n);
}

double surrogate_cutoff_hz(int64_t bitrate) {
  switch (bitrate) {
    case 24000: return 8000.0;
    case 32000: return 10000.0;
    case 48000: return 13000.0;
    case 64000: return 15000.0;
    case 96000: return 17000.0;
    case 128000: return 19000.0;
    default:
      throw std::invalid_argument("unsupported bitrate: " +
                                  std::to_string(bitrate));
  }
}

namespace {

std::vector<double> degrade_surrogate(std::span<const double> target,
                                      int64_t bitrate, int64_t sample_rate,
                                      Rng& rng) {
  double cutoff = surrogate_cutoff_hz(bitrate);
  auto lp = lowpass_brickwall(target, cutoff, sample_rate);

  // band-limited quantization-style noise at -30 dB relative band energy
  dsp::StftConfig scfg;
  scfg.sample_rate = sample_rate;
  scfg.window_len = 1024;
  scfg.hop_len = 256;
  scfg.fft_len = 1024;
  if (int64_t(lp.size()) < scfg.window_len) return lp;  // too short for noise stage
  auto spec = dsp::stft(lp, scfg);
  auto plan = dsp::make_band_plan(scfg, 1000.0);
  double bin_hz = scfg.bin_spacing_hz();
  const double noise_scale = std::pow(10.0, -30.0 / 20.0);
  for (int64_t t = 0; t < spec.n_frames; t++) {
    for (int64_t b = 0; b < plan.n_bands(); b++) {
      auto [start, end] = plan.band_edges[size_t(b)];
      double power = 0.0;
      for (int64_t f = start; f < end; f++) {
        auto v = spec.at(f, t);
        power += v.real() * v.real() + v.imag() * v.imag();
      }
      double rms_bin = std::sqrt(power / double(end - start));
      if (rms_bin <= 0.0) continue;
      double sigma = rms_bin * noise_scale / std::sqrt(2.0);
      for (int64_t f = start; f < end; f++) {
        if (double(f) * bin_hz > cutoff) continue;
        spec.at(f, t) += dsp::cplx(sigma * rng.normal(), sigma * rng.normal());
      }
    }
  }
  return dsp::istft(spec, int64_t(lp.size()));
}

// runs `/bin/sh -c cmd` with a hard timeout, returns exit code
int run_command(const std::string& cmd, double timeout_s,
                const std::string& stderr_path) {
  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    if (!stderr_path.empty()) {
      if (!freopen(stderr_path.c_str(), "w", stderr)) _exit(127);
    }
    execl("/bin/sh", "sh", "-c", cmd.c_str(), (char*)nullptr);
    _exit(127);
  }
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration<double>(timeout_s);
  int status = 0;
  while (true) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (std::chrono::steady_clock::now() > deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw std::runtime_error("external codec timed out after " +
                               std::to_string(timeout_s) + " s: " + cmd);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string read_tail(const std::string& path, size_t max_bytes = 2000) {
  std::ifstream f(path);
  if (!f.good()) return "";
  std::string all((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (all.size() > max_bytes) all = all.substr(all.size() - max_bytes);
  return all;
}

std::string substitute(std::string tmpl, const std::string& key,
                       const std::string& value) {
  size_t pos;
  while ((pos = tmpl.find(key)) != std::string::npos)
    tmpl.replace(pos, key.size(), value);
  return tmpl;
}

std::vector<double> degrade_external(std::span<const double> target,
                                     int64_t bitrate, const DataConfig& cfg,
                                     Rng& rng) {
  int64_t len = int64_t(target.size());
  auto tmp = fs::temp_directory_path();
  std::string tag = std::to_string(::getpid()) + "_" +
                    std::to_string(rng.next_u64() & 0xffffff);
  fs::path in_path = tmp / ("degrade_in_" + tag + ".wav");
  fs::path out_path = tmp / ("degrade_out_" + tag + ".wav");
  fs::path err_path = tmp / ("degrade_err_" + tag + ".log");

  wav::WavData in;
  in.sample_rate = cfg.sample_rate;
  in.format = wav::SampleFormat::pcm16;
  in.channels = {std::vector<double>(target.begin(), target.end())};
  wav::write(in_path.string(), in);

  std::string cmd = cfg.external_codec_cmd;
  cmd = substitute(cmd, "{in}", in_path.string());
  cmd = substitute(cmd, "{out}", out_path.string());
  cmd = substitute(cmd, "{bitrate}", std::to_string(bitrate));

  auto cleanup = [&]() {
    std::error_code ec;
    fs::remove(in_path, ec);
    fs::remove(out_path, ec);
    fs::remove(err_path, ec);
  };
  int code;
  try {
    code = run_command(cmd, cfg.codec_timeout_s, err_path.string());
  } catch (...) {
    cleanup();
    throw;
  }
  if (code != 0) {
    std::string diag = read_tail(err_path.string());
    cleanup();
    throw std::runtime_error("external codec failed (exit " +
                             std::to_string(code) + "): " + cmd +
                             (diag.empty() ? "" : "\nstderr: " + diag));
  }
  if (!fs::exists(out_path)) {
    cleanup();
    throw std::runtime_error("external codec produced no output: " + cmd);
  }
  auto decoded = wav::read(out_path.string());
  cleanup();
  std::vector<double> y = decoded.mono_mix();

  // codecs add coder delay; line the decoded audio back up with the source
  int64_t max_lag = std::min<int64_t>(4800, int64_t(y.size()));
  int64_t probe = std::min<int64_t>(len, cfg.sample_rate);
  int64_t best_lag = 0;
  double best = -1e300;
  for (int64_t lag = 0; lag <= max_lag; lag++) {
    double acc = 0.0;
    int64_t n = std::min(probe, int64_t(y.size()) - lag);
    for (int64_t i = 0; i < n; i++) acc += y[size_t(lag + i)] * target[size_t(i)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  std::vector<double> out(static_cast<size_t>(len), 0.0);
  for (int64_t i = 0; i < len; i++) {
    int64_t j = best_lag + i;
    if (j < int64_t(y.size())) out[size_t(i)] = y[size_t(j)];
  }
  return out;
}

}  // namespace

std::vector<double> degrade(std::span<const double> target, int64_t bitrate,
                            const DataConfig& cfg, Rng& rng) {
  cfg.validate();
  check(std::find(cfg.bitrates.begin(), cfg.bitrates.end(), bitrate) !=
            cfg.bitrates.end(),
        "unsupported bitrate: " + std::to_string(bitrate));
  if (cfg.degrade_method == "surrogate")
    return degrade_surrogate(target, bitrate, cfg.sample_rate, rng);
  return degrade_external(target, bitrate, cfg, rng);
}

void rescale_pair(std::vector<double>& degraded, std::vector<double>& target) {
  check(!degraded.empty() && !target.empty(), "rescale_pair: empty input");
  double peak = 1e-12;
  for (double v : degraded) peak = std::max(peak, std::abs(v));
  for (double v : target) peak = std::max(peak, std::abs(v));
  double inv = 1.0 / peak;
  for (double& v : degraded) v *= inv;
  for (double& v : target) v *= inv;
}

TrainBatch make_batch(const StemLibrary& lib, Rng& rng, int64_t batch_size,
                      const DataConfig& cfg) {
  cfg.validate();
  check(batch_size >= 1, "batch_size must be >= 1");
  TrainBatch batch;
  for (int64_t i = 0; i < batch_size; i++) {
    MixMeta meta;
    auto target = sample_mixture(lib, rng, cfg, &meta);
    meta.bitrate =
        cfg.bitrates[size_t(rng.uniform_int(0, int64_t(cfg.bitrates.size()) - 1))];
    auto degraded = degrade(target, meta.bitrate, cfg, rng);
    rescale_pair(degraded, target);
    batch.degraded.push_back(std::move(degraded));
    batch.target.push_back(std::move(target));
    batch.meta.push_back(std::move(meta));
  }
  return batch;
}

}  // namespace apollo::data
