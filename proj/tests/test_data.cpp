// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "apollo/data.hpp"
#include "apollo/dsp.hpp"
#include "apollo/fft.hpp"
#include "apollo/wav.hpp"
#include "testutil.hpp"

using namespace apollo;
namespace fs = std::filesystem;

namespace {

fs::path temp_root(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("apollo_data_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_mono(const fs::path& path, const std::vector<double>& x,
                int64_t sr = 44100) {
  wav::WavData w;
  w.sample_rate = sr;
  w.format = wav::SampleFormat::float32;
  w.channels = {x};
  fs::create_directories(path.parent_path());
  wav::write(path.string(), w);
}

// a small corpus of distinct tones, one track with two stems + extra tracks
fs::path make_fixture_corpus(const std::string& tag, int64_t n_stems,
                             int64_t len = 44100) {
  auto root = temp_root(tag);
  Rng rng(99);
  for (int64_t s = 0; s < n_stems; s++) {
    std::vector<double> x(static_cast<size_t>(len));
    double f0 = 220.0 * double(s + 1);
    for (int64_t i = 0; i < len; i++)
      x[size_t(i)] = 0.4 * std::sin(2.0 * M_PI * f0 * double(i) / 44100.0) +
                     0.05 * rng.normal();
    write_mono(root / ("track" + std::to_string(s)) / "stem.wav", x);
  }
  return root;
}

std::string manifest_for(const fs::path& root) {
  std::string manifest = data::scan_corpus(root.string());
  auto mpath = root / "manifest.json";
  std::ofstream f(mpath);
  f << manifest;
  f.close();
  return mpath.string();
}

}  // namespace

TEST_CASE("activity detection: silence, constant, tone-silence-tone") {
  std::vector<double> zeros(44100, 0.0);
  CHECK(data::detect_activity(zeros, 44100).empty());

  std::vector<double> ones(44100, 1.0);
  auto full = data::detect_activity(ones, 44100);
  REQUIRE(full.size() == 1);
  CHECK(full[0].first == 0);
  CHECK(full[0].second == 44100);

  // 1 s tone + 1 s silence + 1 s tone
  int64_t sr = 44100;
  std::vector<double> x(static_cast<size_t>(3 * sr), 0.0);
  for (int64_t i = 0; i < sr; i++) {
    double v = 0.5 * std::sin(2.0 * M_PI * 440.0 * double(i) / double(sr));
    x[size_t(i)] = v;
    x[size_t(2 * sr + i)] = v;
  }
  auto segs = data::detect_activity(x, sr);
  REQUIRE(segs.size() == 2);
  int64_t hop = sr / 4;
  CHECK(std::abs(segs[0].first - 0) <= hop);
  CHECK(std::abs(segs[0].second - sr) <= hop);
  CHECK(std::abs(segs[1].first - 2 * sr) <= hop);
  CHECK(std::abs(segs[1].second - 3 * sr) <= hop);

  // the active regions carry essentially all of the energy
  double total = 0.0, active = 0.0;
  for (double v : x) total += v * v;
  for (auto [s, e] : segs)
    for (int64_t i = s; i < e; i++) active += x[size_t(i)] * x[size_t(i)];
  CHECK(active / total > 0.99);
}

TEST_CASE("scan + load: manifest round trip, single-stem mixture is a scaled clip") {
  auto root = make_fixture_corpus("scan", 1);
  auto lib = data::load_library(manifest_for(root));
  REQUIRE(lib.stems.size() == 1);
  CHECK(lib.stems[0].track == "track0");
  CHECK(!lib.stems[0].active.empty());

  data::DataConfig dcfg;
  dcfg.clip_seconds = 0.5;
  Rng rng(1);
  data::MixMeta meta;
  auto mix = data::sample_mixture(lib, rng, dcfg, &meta);
  CHECK(mix.size() == 22050);
  REQUIRE(meta.stems.size() == 1);
  REQUIRE(meta.gains_db.size() == 1);
  double g = std::pow(10.0, meta.gains_db[0] / 20.0);
  CHECK(g > std::pow(10.0, -0.5));
  CHECK(g < std::pow(10.0, 0.5));
  // locate the clip in the source stem to confirm pure scaling
  bool found = false;
  const auto& src = lib.stems[0].samples;
  for (size_t off = 0; off + mix.size() <= src.size() && !found; off++) {
    if (std::abs(src[off] * g - mix[0]) < 1e-12 &&
        std::abs(src[off + 100] * g - mix[100]) < 1e-12) {
      found = true;
      for (size_t i = 0; i < mix.size(); i += 997)
        CHECK(mix[i] == doctest::Approx(src[off + i] * g).epsilon(1e-12));
    }
  }
  CHECK(found);
  fs::remove_all(root);
}

TEST_CASE("seeded mixture sampling is byte-identical across runs") {
  auto root = make_fixture_corpus("seeded", 3, 22050);
  auto lib = data::load_library(manifest_for(root));
  data::DataConfig dcfg;
  dcfg.clip_seconds = 0.25;
  Rng a(42), b(42);
  auto batch_a = data::make_batch(lib, a, 2, dcfg);
  auto batch_b = data::make_batch(lib, b, 2, dcfg);
  for (size_t i = 0; i < batch_a.degraded.size(); i++) {
    CHECK(batch_a.degraded[i] == batch_b.degraded[i]);
    CHECK(batch_a.target[i] == batch_b.target[i]);
    CHECK(batch_a.meta[i].bitrate == batch_b.meta[i].bitrate);
  }
  fs::remove_all(root);
}

TEST_CASE("stem-count distribution over [1,8] is uniform (chi-squared)") {
  auto root = make_fixture_corpus("chi2", 9, 8820);
  auto lib = data::load_library(manifest_for(root));
  data::DataConfig dcfg;
  dcfg.clip_seconds = 0.05;
  Rng rng(7);
  std::vector<int64_t> hist(9, 0);
  const int64_t draws = 10000;
  for (int64_t i = 0; i < draws; i++) {
    data::MixMeta meta;
    (void)data::sample_mixture(lib, rng, dcfg, &meta);
    REQUIRE(meta.stems.size() >= 1);
    REQUIRE(meta.stems.size() <= 8);
    hist[meta.stems.size()]++;
  }
  double chi2 = 0.0;
  double expect = double(draws) / 8.0;
  for (int64_t c = 1; c <= 8; c++) {
    double d = double(hist[size_t(c)]) - expect;
    chi2 += d * d / expect;
  }
  // 7 dof: p > 0.01 requires chi2 < 18.48
  CHECK(chi2 < 18.48);
  fs::remove_all(root);
}

TEST_CASE("brickwall low-pass is energy-non-increasing and kills high bands") {
  Rng rng(5);
  auto x = testutil::random_wave(44100, rng);
  auto lp = data::lowpass_brickwall(x, 8000.0, 44100);
  double ex = 0.0, el = 0.0;
  for (size_t i = 0; i < x.size(); i++) {
    ex += x[i] * x[i];
    el += lp[i] * lp[i];
  }
  CHECK(el <= ex + 1e-6);

  // spectral content above the cutoff is gone
  auto spec = fft::rfft(lp);
  double bin_hz = 44100.0 / double(lp.size());
  for (size_t k = 0; k < spec.size(); k++)
    if (double(k) * bin_hz > 8000.0) CHECK(std::abs(spec[k]) < 1e-9);
}

TEST_CASE("surrogate degradation: high-band attenuation and silence fixpoint") {
  Rng rng(6);
  auto x = testutil::random_wave(44100, rng);  // white-ish noise
  data::DataConfig dcfg;
  Rng drng(1);
  auto y = data::degrade(x, 24000, dcfg, drng);
  REQUIRE(y.size() == x.size());

  // energy above 9 kHz attenuated by >= 40 dB relative to the input
  auto band_energy = [](const std::vector<double>& s, double lo) {
    auto spec = fft::rfft(s);
    double bin_hz = 44100.0 / double(s.size());
    double acc = 0.0;
    for (size_t k = 0; k < spec.size(); k++)
      if (double(k) * bin_hz > lo) acc += std::norm(spec[k]);
    return acc;
  };
  double before = band_energy(x, 9000.0);
  double after = band_energy(y, 9000.0);
  CHECK(10.0 * std::log10(before / std::max(after, 1e-30)) >= 40.0);

  std::vector<double> silence(44100, 0.0);
  Rng drng2(1);
  auto ys = data::degrade(silence, 24000, dcfg, drng2);
  for (double v : ys) CHECK(v == 0.0);

  Rng drng3(1);
  CHECK_THROWS_AS(data::degrade(x, 12345, dcfg, drng3), std::invalid_argument);
}

TEST_CASE("external codec hook: pass-through command, failure diagnostics") {
  Rng rng(7);
  auto x = testutil::random_wave(22050, rng, 0.3);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  for (double& v : x) v *= 0.9 / peak;  // keep the PCM16 hook unclipped
  data::DataConfig dcfg;
  dcfg.degrade_method = "external";
  dcfg.external_codec_cmd = "cp {in} {out}";
  Rng drng(1);
  auto y = data::degrade(x, 64000, dcfg, drng);
  CHECK(y.size() == x.size());
  // pcm16 round trip through the hook: equal up to quantization
  CHECK(testutil::max_abs_diff(x, y) < 2.0 / 32768.0);

  data::DataConfig bad = dcfg;
  bad.external_codec_cmd = "sh -c 'echo boom >&2; exit 3'";
  Rng drng2(1);
  CHECK_THROWS_WITH_AS(data::degrade(x, 64000, bad, drng2),
                       doctest::Contains("boom"), std::runtime_error);

  data::DataConfig none = dcfg;
  none.external_codec_cmd = "true";
  Rng drng3(1);
  CHECK_THROWS_AS(data::degrade(x, 64000, none, drng3), std::runtime_error);

  data::DataConfig slow = dcfg;
  slow.external_codec_cmd = "sleep 5";
  slow.codec_timeout_s = 0.2;
  Rng drng4(1);
  CHECK_THROWS_WITH_AS(data::degrade(x, 64000, slow, drng4),
                       doctest::Contains("timed out"), std::runtime_error);
}

TEST_CASE("rescale_pair: common divisor, silence guard, ratio preservation") {
  std::vector<double> d = {0.25, -0.5, 0.1};
  std::vector<double> t = {2.0, -1.0, 0.5};
  double ratio = d[1] / t[1];
  data::rescale_pair(d, t);
  CHECK(t[0] == doctest::Approx(1.0));
  CHECK(std::abs(d[1]) <= 1.0);
  CHECK(d[1] / t[1] == doctest::Approx(ratio));

  std::vector<double> zd(5, 0.0), zt(5, 0.0);
  data::rescale_pair(zd, zt);
  for (double v : zd) CHECK(v == 0.0);
  for (double v : zt) CHECK(v == 0.0);
}

TEST_CASE("make_batch: shapes, determinism, peak bound") {
  auto root = make_fixture_corpus("batch", 2);
  auto lib = data::load_library(manifest_for(root));
  data::DataConfig dcfg;  // 3 s clips
  Rng rng(3);
  auto batch = data::make_batch(lib, rng, 2, dcfg);
  REQUIRE(batch.degraded.size() == 2);
  for (size_t i = 0; i < 2; i++) {
    CHECK(batch.degraded[i].size() == 132300);
    CHECK(batch.target[i].size() == 132300);
    double peak = 0.0;
    for (double v : batch.degraded[i]) peak = std::max(peak, std::abs(v));
    for (double v : batch.target[i]) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.0 + 1e-12);
  }
  fs::remove_all(root);
}
