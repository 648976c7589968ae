// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "apollo/params.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace apollo::nn {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor& ParameterStore::create(const std::string& name, Tensor t,
                               bool trainable) {
  check(!has(name), "duplicate parameter name: " + name);
  t.set_requires_grad(trainable);
  order_.push_back(name);
  auto [it, ok] = by_name_.emplace(name, Entry{std::move(t), trainable});
  (void)ok;
  return it->second.tensor;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  check(it != by_name_.end(), "unknown parameter: " + name);
  return it->second.tensor;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  check(it != by_name_.end(), "unknown parameter: " + name);
  return it->second.tensor;
}

bool ParameterStore::has(const std::string& name) const {
  return by_name_.count(name) > 0;
}

bool ParameterStore::is_param(const std::string& name) const {
  auto it = by_name_.find(name);
  check(it != by_name_.end(), "unknown parameter: " + name);
  return it->second.is_param;
}

int64_t ParameterStore::param_count(const std::string& prefix) const {
  int64_t total = 0;
  for (const auto& name : order_) {
    const Entry& e = by_name_.at(name);
    if (e.is_param && name.rfind(prefix, 0) == 0) total += e.tensor.numel();
  }
  return total;
}

std::vector<Tensor> ParameterStore::trainable(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& name : order_) {
    const Entry& e = by_name_.at(name);
    if (e.is_param && name.rfind(prefix, 0) == 0) out.push_back(e.tensor);
  }
  return out;
}

void ParameterStore::zero_grads() {
  for (auto& [name, e] : by_name_)
    if (e.is_param) e.tensor.zero_grad();
}

void checkpoint_save(const ParameterStore& store, const std::string& dir,
                     const std::string& config_json) {
  fs::create_directories(dir);
  json meta;
  meta["format_version"] = 1;
  meta["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  meta["param_count"] = store.param_count();
  json index = json::array();
  int64_t offset = 0;
  for (const auto& name : store.names()) {
    const Tensor& t = store.get(name);
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["dtype"] = "f32";
    entry["offset"] = offset;
    entry["trainable"] = store.is_param(name);
    index.push_back(entry);
    offset += t.numel() * 4;
  }
  meta["tensors"] = index;

  std::ofstream mf(fs::path(dir) / "meta.json");
  check(mf.good(), "cannot write meta.json in " + dir);
  mf << meta.dump(2) << "\n";
  mf.close();

  std::ofstream bf(fs::path(dir) / "params.bin", std::ios::binary);
  check(bf.good(), "cannot write params.bin in " + dir);
  for (const auto& name : store.names()) {
    const Tensor& t = store.get(name);
    std::vector<float> buf(static_cast<size_t>(t.numel()));
    const double* d = t.data();
    for (int64_t i = 0; i < t.numel(); i++) buf[size_t(i)] = float(d[i]);
    bf.write(reinterpret_cast<const char*>(buf.data()),
             std::streamsize(buf.size() * sizeof(float)));
  }
  check(bf.good(), "write failure in params.bin");
}

std::string checkpoint_load(const std::string& dir, ParameterStore& store) {
  std::ifstream mf(fs::path(dir) / "meta.json");
  check(mf.good(), "cannot open checkpoint meta.json in " + dir);
  json meta = json::parse(mf);
  check(meta.at("format_version").get<int>() == 1,
        "unsupported checkpoint format version");

  std::ifstream bf(fs::path(dir) / "params.bin", std::ios::binary);
  check(bf.good(), "cannot open checkpoint params.bin in " + dir);

  for (const auto& entry : meta.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    bool trainable = entry.at("trainable").get<bool>();
    int64_t offset = entry.at("offset").get<int64_t>();
    int64_t n = ag::shape_numel(shape);
    bf.seekg(offset);
    std::vector<float> buf(static_cast<size_t>(n));
    bf.read(reinterpret_cast<char*>(buf.data()),
            std::streamsize(buf.size() * sizeof(float)));
    check(bf.good(), "truncated params.bin reading " + name);
    std::vector<double> vals(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; i++) vals[size_t(i)] = double(buf[size_t(i)]);
    store.create(name, Tensor::from_data(shape, std::move(vals)), trainable);
  }
  return meta.at("config").dump();
}

}  // namespace apollo::nn
