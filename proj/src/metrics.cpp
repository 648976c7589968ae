// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "apollo/common.hpp"

namespace apollo::metrics {

namespace {

constexpr double kCapDb = 100.0;
constexpr double kSilence = 1e-30;

double cap(double db) { return std::clamp(db, -kCapDb, kCapDb); }

double ratio_db(double num, double den) {
  if (den <= 0.0) return kCapDb;
  if (num <= 0.0) return -kCapDb;
  return cap(10.0 * std::log10(num / den));
}

}  // namespace

std::optional<double> si_snr(std::span<const double> est,
                             std::span<const double> ref) {
  check(est.size() == ref.size() && !est.empty(), "si_snr: length mismatch");
  size_t n = est.size();
  double me = 0.0, mr = 0.0;
  for (size_t i = 0; i < n; i++) {
    me += est[i];
    mr += ref[i];
  }
  me /= double(n);
  mr /= double(n);
  double dot = 0.0, rr = 0.0;
  for (size_t i = 0; i < n; i++) {
    double e = est[i] - me, r = ref[i] - mr;
    dot += e * r;
    rr += r * r;
  }
  if (rr < kSilence) return std::nullopt;
  double a = dot / rr;  // projection of est onto ref
  double sig = 0.0, err = 0.0;
  for (size_t i = 0; i < n; i++) {
    double e = est[i] - me, r = ref[i] - mr;
    double s = a * r;
    sig += s * s;
    err += (e - s) * (e - s);
  }
  return ratio_db(sig, err);
}

std::optional<double> sdr(std::span<const double> est,
                          std::span<const double> ref) {
  check(est.size() == ref.size() && !est.empty(), "sdr: length mismatch");
  double rr = 0.0, ee = 0.0;
  for (size_t i = 0; i < est.size(); i++) {
    rr += ref[i] * ref[i];
    double d = ref[i] - est[i];
    ee += d * d;
  }
  if (rr < kSilence) return std::nullopt;
  return ratio_db(rr, ee);
}

RtfReport bench_rtf(const std::function<void()>& run_once, int64_t iters,
                    int64_t warmup, double clip_seconds) {
  check(iters >= 1, "bench_rtf: iters must be >= 1");
  for (int64_t i = 0; i < warmup; i++) run_once();
  std::vector<double> times_ms;
  times_ms.reserve(size_t(iters));
  for (int64_t i = 0; i < iters; i++) {
    auto t0 = std::chrono::steady_clock::now();
    run_once();
    auto t1 = std::chrono::steady_clock::now();
    times_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  double sum = 0.0;
  for (double t : times_ms) sum += t;
  std::sort(times_ms.begin(), times_ms.end());
  size_t p95 = size_t(std::ceil(0.95 * double(times_ms.size()))) - 1;
  p95 = std::min(p95, times_ms.size() - 1);
  RtfReport r;
  r.mean_ms = sum / double(iters);
  r.p95_ms = times_ms[p95];
  r.iters = iters;
  r.clip_seconds = clip_seconds;
  return r;
}

void MetricReport::finalize() {
  double ssum = 0.0, dsum = 0.0;
  int64_t sn = 0, dn = 0;
  for (const auto& f : files) {
    if (f.si_snr_db) {
      ssum += *f.si_snr_db;
      sn++;
    }
    if (f.sdr_db) {
      dsum += *f.sdr_db;
      dn++;
    }
  }
  mean_si_snr = sn ? std::optional<double>(ssum / double(sn)) : std::nullopt;
  mean_sdr = dn ? std::optional<double>(dsum / double(dn)) : std::nullopt;
}

std::string report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["files"] = nlohmann::json::array();
  for (const auto& f : r.files) {
    nlohmann::json e;
    e["name"] = f.name;
    if (f.si_snr_db)
      e["si_snr_db"] = *f.si_snr_db;
    else
      e["si_snr_db"] = nullptr;
    if (f.sdr_db)
      e["sdr_db"] = *f.sdr_db;
    else
      e["sdr_db"] = nullptr;
    j["files"].push_back(e);
  }
  if (r.mean_si_snr) j["mean_si_snr_db"] = *r.mean_si_snr;
  if (r.mean_sdr) j["mean_sdr_db"] = *r.mean_sdr;
  return j.dump(2);
}

std::string report_to_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "name,si_snr_db,sdr_db\n";
  for (const auto& f : r.files) {
    os << f.name << ",";
    if (f.si_snr_db) os << *f.si_snr_db;
    os << ",";
    if (f.sdr_db) os << *f.sdr_db;
    os << "\n";
  }
  os << "mean,";
  if (r.mean_si_snr) os << *r.mean_si_snr;
  os << ",";
  if (r.mean_sdr) os << *r.mean_sdr;
  os << "\n";
  return os.str();
}

}  // namespace apollo::metrics
