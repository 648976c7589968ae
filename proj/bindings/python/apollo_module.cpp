// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "apollo/config.hpp"
#include "apollo/data.hpp"
#include "apollo/dsp.hpp"
#include "apollo/generator.hpp"
#include "apollo/metrics.hpp"
#include "apollo/params.hpp"

namespace py = pybind11;
using namespace apollo;

namespace {

std::vector<double> to_vec(const py::array_t<double, py::array::c_style |
                                                         py::array::forcecast>& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(py::ssize_t(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

dsp::StftConfig make_cfg(int64_t sample_rate, int64_t window_len,
                         int64_t hop_len, int64_t fft_len) {
  dsp::StftConfig cfg;
  cfg.sample_rate = sample_rate;
  cfg.window_len = window_len;
  cfg.hop_len = hop_len;
  cfg.fft_len = fft_len > 0 ? fft_len : window_len;
  return cfg;
}

// value-owning wrapper so python holds the store and generator together
struct PyGenerator {
  nn::ParameterStore store;
  cfg::RunConfig rc;
  std::unique_ptr<gen::Generator> model;

  static std::shared_ptr<PyGenerator> random(const std::string& config_json,
                                             uint64_t seed) {
    auto pg = std::make_shared<PyGenerator>();
    pg->rc = config_json.empty() ? cfg::default_run_config()
                                 : cfg::run_config_from_json(config_json);
    Rng rng(seed);
    pg->model = std::make_unique<gen::Generator>(
        gen::Generator::create(pg->rc.generator, pg->store, rng));
    pg->model->set_trainable(false);
    return pg;
  }

  static std::shared_ptr<PyGenerator> load(const std::string& dir) {
    auto pg = std::make_shared<PyGenerator>();
    std::string config_json = nn::checkpoint_load(dir, pg->store);
    pg->rc = cfg::run_config_from_json(config_json);
    pg->model = std::make_unique<gen::Generator>(
        gen::Generator::attach(pg->rc.generator, pg->store));
    pg->model->set_trainable(false);
    return pg;
  }

  py::array_t<double> forward(const py::array_t<double, py::array::c_style |
                                                            py::array::forcecast>& wave) {
    return to_array(model->forward(to_vec(wave)));
  }

  void save(const std::string& dir) {
    nn::checkpoint_save(store, dir, cfg::run_config_to_json(rc));
  }

  int64_t param_count() const { return model->param_count(); }
  std::string config_json() const { return cfg::run_config_to_json(rc); }
  int64_t n_bands() const { return model->band_plan().n_bands(); }
};

struct PyStream {
  std::shared_ptr<PyGenerator> owner;
  std::unique_ptr<gen::StreamingSession> session;

  py::array_t<double> push(const py::array_t<double, py::array::c_style |
                                                         py::array::forcecast>& chunk) {
    auto v = to_vec(chunk);
    return to_array(session->push(v));
  }
  py::array_t<double> flush() { return to_array(session->flush()); }
  void reset() { session->reset(); }
};

}  // namespace

PYBIND11_MODULE(apollo_core, m) {
  m.doc() = "band-split audio restoration core";

  m.def(
      "stft",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& wave,
         int64_t sample_rate, int64_t window_len, int64_t hop_len,
         int64_t fft_len) {
        auto cfg = make_cfg(sample_rate, window_len, hop_len, fft_len);
        auto spec = dsp::stft(to_vec(wave), cfg);
        py::array_t<std::complex<double>> out(
            {py::ssize_t(spec.n_bins), py::ssize_t(spec.n_frames)});
        std::copy(spec.data.begin(), spec.data.end(), out.mutable_data());
        return out;
      },
      py::arg("wave"), py::arg("sample_rate") = 44100,
      py::arg("window_len") = 882, py::arg("hop_len") = 441,
      py::arg("fft_len") = 0);

  m.def(
      "istft",
      [](const py::array_t<std::complex<double>,
                           py::array::c_style | py::array::forcecast>& spec,
         int64_t out_len, int64_t sample_rate, int64_t window_len,
         int64_t hop_len, int64_t fft_len) {
        if (spec.ndim() != 2) throw std::invalid_argument("spec must be 2-D");
        auto cfg = make_cfg(sample_rate, window_len, hop_len, fft_len);
        dsp::ComplexSpectrogram s;
        s.config = cfg;
        s.n_bins = spec.shape(0);
        s.n_frames = spec.shape(1);
        s.data.assign(spec.data(), spec.data() + spec.size());
        return to_array(dsp::istft(s, out_len));
      },
      py::arg("spec"), py::arg("out_len"), py::arg("sample_rate") = 44100,
      py::arg("window_len") = 882, py::arg("hop_len") = 441,
      py::arg("fft_len") = 0);

  m.def(
      "make_band_plan",
      [](double bandwidth_hz, int64_t sample_rate, int64_t window_len,
         int64_t hop_len, int64_t fft_len) {
        auto cfg = make_cfg(sample_rate, window_len, hop_len, fft_len);
        auto plan = dsp::make_band_plan(cfg, bandwidth_hz);
        return plan.band_edges;
      },
      py::arg("bandwidth_hz") = 160.0, py::arg("sample_rate") = 44100,
      py::arg("window_len") = 882, py::arg("hop_len") = 441,
      py::arg("fft_len") = 0);

  m.def(
      "si_snr",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& est,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ref)
          -> std::optional<double> {
        return metrics::si_snr(to_vec(est), to_vec(ref));
      },
      py::arg("est"), py::arg("ref"));

  m.def(
      "sdr",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& est,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& ref)
          -> std::optional<double> {
        return metrics::sdr(to_vec(est), to_vec(ref));
      },
      py::arg("est"), py::arg("ref"));

  m.def(
      "degrade",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& wave,
         int64_t bitrate, uint64_t seed, int64_t sample_rate) {
        data::DataConfig dcfg;
        dcfg.sample_rate = sample_rate;
        Rng rng(seed);
        return to_array(data::degrade(to_vec(wave), bitrate, dcfg, rng));
      },
      py::arg("wave"), py::arg("bitrate"), py::arg("seed") = 0,
      py::arg("sample_rate") = 44100);

  m.def(
      "detect_activity",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& wave,
         int64_t sample_rate) {
        return data::detect_activity(to_vec(wave), sample_rate);
      },
      py::arg("wave"), py::arg("sample_rate") = 44100);

  m.def("default_config", [] {
    return cfg::run_config_to_json(cfg::default_run_config());
  });

  py::class_<PyGenerator, std::shared_ptr<PyGenerator>>(m, "Generator")
      .def_static("random", &PyGenerator::random, py::arg("config_json") = "",
                  py::arg("seed") = 0)
      .def_static("load", &PyGenerator::load, py::arg("checkpoint_dir"))
      .def("forward", &PyGenerator::forward, py::arg("wave"))
      .def("save", &PyGenerator::save, py::arg("checkpoint_dir"))
      .def("param_count", &PyGenerator::param_count)
      .def("config_json", &PyGenerator::config_json)
      .def("n_bands", &PyGenerator::n_bands)
      .def("stream", [](std::shared_ptr<PyGenerator> self) {
        auto s = std::make_unique<PyStream>();
        s->owner = self;
        s->session = std::make_unique<gen::StreamingSession>(
            self->model->open_stream());
        return s;
      });

  py::class_<PyStream>(m, "StreamingSession")
      .def("push", &PyStream::push, py::arg("chunk"))
      .def("flush", &PyStream::flush)
      .def("reset", &PyStream::reset);
}
