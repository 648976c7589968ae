// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <map>
#include <string>
#include <vector>

#include "apollo/tensor.hpp"

namespace apollo::nn {

using ag::Shape;
using ag::Tensor;

// Named, ordered collection of model tensors. A tensor is either a learned
// parameter or persistent auxiliary state (e.g. power-iteration vectors);
// the distinction is fixed at creation, while requires_grad may be toggled
// for evaluation passes.
class ParameterStore {
 public:
  Tensor& create(const std::string& name, Tensor t, bool trainable = true);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  bool is_param(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }

  // total element count of learned parameters under the prefix
  int64_t param_count(const std::string& prefix = "") const;

  std::vector<Tensor> trainable(const std::string& prefix = "") const;

  void zero_grads();

 private:
  struct Entry {
    Tensor tensor;
    bool is_param;
  };
  std::vector<std::string> order_;
  std::map<std::string, Entry> by_name_;
};

// Checkpoint container: directory with meta.json (config snapshot, format
// version, parameter count, name -> {shape, dtype, offset} index) and
// params.bin (little-endian float32, concatenated in index order).
void checkpoint_save(const ParameterStore& store, const std::string& dir,
                     const std::string& config_json);

// Loads the container into a fresh store; returns the config snapshot JSON.
std::string checkpoint_load(const std::string& dir, ParameterStore& store);

}  // namespace apollo::nn
