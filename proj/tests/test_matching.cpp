// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "hoidet/matching.hpp"
#include "hoidet/rng.hpp"

using namespace hoidet;
using train::brute_force_match;
using train::hungarian_match;

TEST_CASE("hungarian diagonal optimum") {
  auto r = hungarian_match({1, 2, 2, 1}, 2);
  CHECK(r.col_of_row == std::vector<int>{0, 1});
  CHECK(r.total == 2.0);
}

TEST_CASE("hungarian tie-break picks the identity") {
  auto r = hungarian_match({1, 1, 1, 1}, 2);
  CHECK(r.col_of_row == std::vector<int>{0, 1});
  auto r3 = hungarian_match(std::vector<double>(9, 5.0), 3);
  CHECK(r3.col_of_row == std::vector<int>{0, 1, 2});
}

TEST_CASE("hungarian rejects bad input") {
  CHECK_THROWS_AS(hungarian_match({1, 2, 3}, 2), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_match({}, 0), std::invalid_argument);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(hungarian_match({1, inf, 2, 3}, 2), std::invalid_argument);
}

TEST_CASE("hungarian equals brute force on random matrices up to 8x8") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + int(rng.uniform_int(0, 7));
    std::vector<double> cost(std::size_t(n) * n);
    const bool integral = trial % 2 == 0;
    for (auto& c : cost)
      c = integral ? double(rng.uniform_int(-5, 5)) : rng.uniform(-10.0, 10.0);
    auto h = hungarian_match(cost, n);
    auto b = brute_force_match(cost, n);
    INFO("trial " << trial << " n " << n);
    CHECK(h.total == b.total);
  }
}

TEST_CASE("constant shift leaves the assignment unchanged") {
  Rng rng(321);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + int(rng.uniform_int(0, 4));
    std::vector<double> cost(std::size_t(n) * n);
    for (auto& c : cost) c = rng.uniform(-5.0, 5.0);
    auto base = hungarian_match(cost, n);
    std::vector<double> shifted = cost;
    for (auto& c : shifted) c += 17.25;
    auto moved = hungarian_match(shifted, n);
    CHECK(base.col_of_row == moved.col_of_row);
  }
}

TEST_CASE("zero-cost padding columns absorb unmatched rows") {
  // 3 queries, 2 real ground truths, 1 phi column (all zero)
  // costs: q0 close to gt0, q2 close to gt1, q1 left for phi
  const std::vector<double> cost = {
      0.1, 5.0, 0.0,  //
      4.0, 4.0, 0.0,  //
      5.0, 0.2, 0.0,  //
  };
  auto h = hungarian_match(cost, 3);
  auto b = brute_force_match(cost, 3);
  CHECK(h.total == b.total);
  CHECK(h.col_of_row == std::vector<int>{0, 2, 1});
}
