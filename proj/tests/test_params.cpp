// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "apollo/params.hpp"
#include "testutil.hpp"

using namespace apollo;
namespace fs = std::filesystem;

namespace {
std::string temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("apollo_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
}
}  // namespace

TEST_CASE("parameter store: names, counts, duplicate rejection") {
  Rng rng(1);
  nn::ParameterStore store;
  store.create("gen/a", ag::Tensor::randn({3, 4}, rng));
  store.create("gen/b", ag::Tensor::randn({5}, rng));
  store.create("disc/c", ag::Tensor::randn({2, 2}, rng));
  store.create("disc/u", ag::Tensor::randn({2}, rng), /*trainable=*/false);

  CHECK(store.param_count() == 12 + 5 + 4);
  CHECK(store.param_count("gen/") == 17);
  CHECK(store.param_count("disc/") == 4);
  CHECK(store.trainable("gen/").size() == 2);
  CHECK_THROWS_AS(store.create("gen/a", ag::Tensor::zeros({1})),
                  std::invalid_argument);
}

TEST_CASE("checkpoint container round-trips and is byte-stable") {
  Rng rng(2);
  nn::ParameterStore store;
  store.create("gen/w", ag::Tensor::randn({4, 3}, rng));
  store.create("gen/b", ag::Tensor::randn({4}, rng));
  store.create("disc/u", ag::Tensor::randn({7}, rng), false);

  auto dir = temp_dir("ckpt");
  nn::checkpoint_save(store, dir, R"({"note": 1})");

  nn::ParameterStore loaded;
  std::string config = nn::checkpoint_load(dir, loaded);
  CHECK(config.find("note") != std::string::npos);
  CHECK(loaded.names() == store.names());
  CHECK(loaded.get("disc/u").requires_grad() == false);
  CHECK(loaded.get("gen/w").requires_grad() == true);

  // float32 container: loaded values equal the f32-rounded originals,
  // and saving the loaded store reproduces identical bytes
  for (const auto& name : store.names()) {
    const auto& a = store.get(name);
    const auto& b = loaded.get(name);
    REQUIRE(a.shape() == b.shape());
    for (int64_t i = 0; i < a.numel(); i++)
      CHECK(b.data()[i] == double(float(a.data()[i])));
  }
  auto dir2 = temp_dir("ckpt2");
  nn::checkpoint_save(loaded, dir2, R"({"note": 1})");
  CHECK(slurp(fs::path(dir) / "params.bin") ==
        slurp(fs::path(dir2) / "params.bin"));

  fs::remove_all(dir);
  fs::remove_all(dir2);
}
