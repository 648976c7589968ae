// Copyright 2026 apollo-cpp authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include "apollo/tensor.hpp"
#include "testutil.hpp"

using namespace apollo;
using ag::Tensor;

TEST_CASE("sum of squares has gradient 2x") {
  Rng rng(1);
  Tensor x = Tensor::randn({3, 4}, rng);
  x.set_requires_grad(true);
  Tensor loss = ag::sum(ag::square(x));
  loss.backward();
  for (int64_t i = 0; i < x.numel(); i++)
    CHECK(x.grad()[size_t(i)] == doctest::Approx(2.0 * x.data()[i]));
}

TEST_CASE("backward on a non-scalar throws") {
  Rng rng(2);
  Tensor x = Tensor::randn({2, 2}, rng);
  x.set_requires_grad(true);
  Tensor y = ag::mul_scalar(x, 2.0);
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);
}

TEST_CASE("detach blocks gradient flow") {
  Rng rng(3);
  Tensor x = Tensor::randn({4}, rng);
  x.set_requires_grad(true);
  Tensor loss = ag::sum(ag::square(x.detach()));
  loss.backward();
  CHECK(x.grad().empty());
}

TEST_CASE("gradients accumulate across two uses of one tensor") {
  Tensor x = Tensor::full({2}, 3.0);
  x.set_requires_grad(true);
  Tensor loss = ag::sum(ag::add(x, x));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("elementwise ops pass finite-difference checks") {
  Rng rng(4);
  auto mk = [&](ag::Shape s) {
    Tensor t = Tensor::uniform(s, rng, 0.5, 2.0);
    t.set_requires_grad(true);
    return t;
  };
  Tensor a = mk({2, 3}), b = mk({2, 3});
  auto cases = std::vector<std::function<Tensor()>>{
      [&] { return ag::sum(ag::mul(a, b)); },
      [&] { return ag::sum(ag::div(a, b)); },
      [&] { return ag::sum(ag::sub(a, b)); },
      [&] { return ag::mean(ag::exp(ag::neg(a))); },
      [&] { return ag::sum(ag::log(a)); },
      [&] { return ag::sum(ag::sqrt(a)); },
      [&] { return ag::sum(ag::sigmoid(a)); },
      [&] { return ag::sum(ag::abs(ag::sub(a, b))); },
      [&] { return ag::dot(a, b); },
      [&] { return ag::div_by_scalar_tensor(ag::sum(a), ag::sum(b)); },
  };
  for (auto& fn : cases) CHECK(testutil::fd_gradcheck(fn, {a, b}) < 1e-6);
}

TEST_CASE("matmul values and gradients") {
  Rng rng(5);
  Tensor a = Tensor::randn({3, 4}, rng);
  Tensor b = Tensor::randn({4, 2}, rng);
  Tensor c = ag::matmul(a, b);
  for (int64_t i = 0; i < 3; i++)
    for (int64_t j = 0; j < 2; j++) {
      double acc = 0.0;
      for (int64_t k = 0; k < 4; k++)
        acc += a.data()[i * 4 + k] * b.data()[k * 2 + j];
      CHECK(c.data()[i * 2 + j] == doctest::Approx(acc));
    }

  a.set_requires_grad(true);
  b.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(ag::matmul(a, b))); }, {a, b}) <
        1e-6);

  // batched with shared rhs
  Tensor a3 = Tensor::randn({2, 3, 4}, rng);
  a3.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(ag::matmul(a3, b))); }, {a3, b}) <
        1e-6);

  // fully batched
  Tensor b3 = Tensor::randn({2, 4, 5}, rng);
  b3.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(ag::matmul(a3, b3))); },
            {a3, b3}) < 1e-6);
}

TEST_CASE("permute moves data and routes gradients") {
  Rng rng(6);
  Tensor a = Tensor::randn({2, 3, 4}, rng);
  Tensor p = ag::permute(a, {2, 0, 1});
  CHECK(p.shape() == ag::Shape({4, 2, 3}));
  for (int64_t i = 0; i < 2; i++)
    for (int64_t j = 0; j < 3; j++)
      for (int64_t k = 0; k < 4; k++)
        CHECK(p.data()[(k * 2 + i) * 3 + j] ==
              a.data()[(i * 3 + j) * 4 + k]);
  a.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              return ag::sum(ag::square(ag::permute(a, {2, 0, 1})));
            },
            {a}) < 1e-6);
}

TEST_CASE("slice and concat invert each other and route gradients") {
  Rng rng(7);
  Tensor a = Tensor::randn({3, 5}, rng);
  Tensor left = ag::slice(a, 1, 0, 2);
  Tensor right = ag::slice(a, 1, 2, 5);
  Tensor back = ag::concat({left, right}, 1);
  CHECK(back.shape() == a.shape());
  for (int64_t i = 0; i < a.numel(); i++)
    CHECK(back.data()[i] == a.data()[i]);

  a.set_requires_grad(true);
  CHECK(testutil::fd_gradcheck(
            [&] {
              Tensor l = ag::slice(a, 0, 1, 3);
              return ag::sum(ag::square(l));
            },
            {a}) < 1e-6);
  CHECK(testutil::fd_gradcheck(
            [&] {
              Tensor l = ag::slice(a, 1, 0, 2);
              Tensor r = ag::slice(a, 1, 2, 5);
              return ag::sum(ag::square(ag::concat({l, r, l}, 1)));
            },
            {a}) < 1e-6);
}

TEST_CASE("reshape keeps values and gradients aligned") {
  Rng rng(8);
  Tensor a = Tensor::randn({2, 6}, rng);
  a.set_requires_grad(true);
  Tensor r = ag::reshape(a, {3, 4});
  CHECK(r.shape() == ag::Shape({3, 4}));
  CHECK(testutil::fd_gradcheck(
            [&] { return ag::sum(ag::square(ag::reshape(a, {4, 3}))); }, {a}) <
        1e-6);
}
