// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "hoidet/ops.hpp"
#include "hoidet/tensor.hpp"

using namespace hoidet;

TEST_CASE("tensor construction validates shape against data") {
  CHECK_NOTHROW(Tensor({2, 3}, std::vector<Scalar>(6, 0.0)));
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<Scalar>(5, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({0, 3}, std::vector<Scalar>{}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({}, std::vector<Scalar>{}), std::invalid_argument);
}

TEST_CASE("non-finite op output is rejected") {
  Tensor x({1}, {0.0});
  CHECK_THROWS_AS(log_t(x), std::domain_error);
  Tensor y({1}, {-1.0});
  CHECK_THROWS_AS(log_t(y), std::domain_error);
}

TEST_CASE("backward on a simple weighted sum") {
  Tensor w({2}, {1.0, 2.0}, true);
  Tensor x({2}, {3.0, 4.0});
  Tensor loss = sum_all(mul(w, x));
  CHECK(loss.item() == 11.0);
  loss.backward();
  CHECK(w.grad()[0] == 3.0);
  CHECK(w.grad()[1] == 4.0);
  // x is untracked and collects no gradient
  CHECK(x.node().grad.empty());
}

TEST_CASE("backward requires a scalar root") {
  Tensor w({2}, {1.0, 2.0}, true);
  Tensor y = scale(w, 2.0);
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);
}

TEST_CASE("leaf gradients accumulate across backward calls until zeroed") {
  Tensor w({1}, {5.0}, true);
  Tensor l1 = scale(w, 3.0);
  l1.backward();
  CHECK(w.grad()[0] == 3.0);
  Tensor l2 = scale(w, 4.0);
  l2.backward();
  CHECK(w.grad()[0] == 7.0);
  w.zero_grad();
  Tensor l3 = scale(w, 4.0);
  l3.backward();
  CHECK(w.grad()[0] == 4.0);
}

TEST_CASE("diamond-shaped graph accumulates both paths") {
  Tensor x({1}, {2.0}, true);
  Tensor a = scale(x, 3.0);
  Tensor b = scale(x, 5.0);
  Tensor loss = sum_all(add(a, b));
  loss.backward();
  CHECK(x.grad()[0] == 8.0);
}

TEST_CASE("reusing a node in two terms double-counts correctly") {
  Tensor x({1}, {3.0}, true);
  Tensor s = sigmoid(x);
  Tensor loss = sum_all(mul(s, s));  // d/dx s^2 = 2 s s'
  loss.backward();
  const Scalar sv = s.values()[0];
  CHECK_THAT(x.grad()[0], Catch::Matchers::WithinAbs(2.0 * sv * sv * (1.0 - sv), 1e-12));
}

TEST_CASE("no-grad mode builds no graph") {
  Tensor w({2}, {1.0, 2.0}, true);
  {
    NoGradGuard ng;
    Tensor y = scale(w, 2.0);
    CHECK(y.node().parents.empty());
    CHECK_FALSE(y.requires_grad());
  }
  Tensor y2 = scale(w, 2.0);
  CHECK(y2.requires_grad());
}

TEST_CASE("sigmoid value and derivative at zero") {
  Tensor x({1}, {0.0}, true);
  Tensor y = sum_all(sigmoid(x));
  CHECK(y.item() == 0.5);
  y.backward();
  CHECK_THAT(x.grad()[0], Catch::Matchers::WithinAbs(0.25, 1e-15));
}

TEST_CASE("sigmoid is stable for large magnitudes") {
  Tensor x({2}, {500.0, -500.0});
  Tensor y = sigmoid(x);
  CHECK(y.values()[0] == 1.0);
  CHECK(y.values()[1] >= 0.0);
  CHECK(y.values()[1] < 1e-100);
}

TEST_CASE("softplus is stable and exact at extremes") {
  Tensor x({3}, {800.0, -800.0, 0.0});
  Tensor y = softplus(x);
  CHECK(y.values()[0] == 800.0);
  CHECK(y.values()[1] == 0.0);
  CHECK_THAT(y.values()[2], Catch::Matchers::WithinAbs(std::log(2.0), 1e-15));
}

TEST_CASE("softmax rows sum to one and match direct computation") {
  Tensor x({2, 3}, {1.0, 2.0, 3.0, -1.0, 0.0, 1.0});
  Tensor y = softmax(x, 1);
  for (int r = 0; r < 2; ++r) {
    Scalar s = 0;
    for (int c = 0; c < 3; ++c) s += y.values()[r * 3 + c];
    CHECK_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  // invariance under shift
  Tensor xs({2, 3}, {101.0, 102.0, 103.0, 999.0, 1000.0, 1001.0});
  Tensor ys = softmax(xs, 1);
  for (int c = 0; c < 3; ++c) {
    CHECK_THAT(ys.values()[c], Catch::Matchers::WithinAbs(y.values()[c], 1e-12));
    CHECK_THAT(ys.values()[3 + c], Catch::Matchers::WithinAbs(y.values()[c], 1e-12));
  }
}

TEST_CASE("softmax along axis 0 normalizes columns") {
  Tensor x({2, 2}, {0.0, 5.0, 0.0, 5.0});
  Tensor y = softmax(x, 0);
  CHECK_THAT(y.values()[0] + y.values()[2], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(y.values()[1] + y.values()[3], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(y.values()[0] == 0.5);
}

TEST_CASE("reshape round-trips values and gradients") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tensor y = reshape(x, {3, 2});
  CHECK(y.shape() == Shape{3, 2});
  CHECK(y.values() == x.values());
  sum_all(y).backward();
  for (int i = 0; i < 6; ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("matmul matches a hand example") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 2}, {5, 6, 7, 8});
  Tensor c = matmul(a, b);
  CHECK(c.values() == std::vector<Scalar>{19, 22, 43, 50});
}

TEST_CASE("set_requires_grad rejects interior nodes") {
  Tensor x({1}, {1.0}, true);
  Tensor y = scale(x, 2.0);
  CHECK_THROWS_AS(y.set_requires_grad(true), std::logic_error);
}
