// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hoidet::train {

struct MatchResult {
  std::vector<int> col_of_row;  // assignment: row i -> column col_of_row[i]
  double total = 0.0;
};

// Minimum-cost perfect matching on a square cost matrix (row-major, n x n),
// potentials + augmenting paths, O(n^3). Rows are introduced in index order
// and column scans use strict improvement, which fixes the tie-break: among
// equal-cost assignments the lexicographically smallest (by row, then column)
// one is produced.
inline MatchResult hungarian_match(const std::vector<double>& cost, int n) {
  if (n <= 0 || cost.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("hungarian_match: matrix must be square and non-empty");
  for (double c : cost)
    if (!std::isfinite(c)) throw std::invalid_argument("hungarian_match: non-finite cost");

  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[std::size_t(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  MatchResult res;
  res.col_of_row.assign(n, -1);
  for (int j = 1; j <= n; ++j) res.col_of_row[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) res.total += cost[std::size_t(i) * n + res.col_of_row[i]];
  return res;
}

// Exhaustive minimum over all n! assignments, for cross-checking. Scans
// permutations in lexicographic order and keeps the first minimum, matching
// the tie-break of hungarian_match.
inline MatchResult brute_force_match(const std::vector<double>& cost, int n) {
  if (n <= 0 || cost.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("brute_force_match: matrix must be square and non-empty");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  MatchResult best;
  best.total = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost[std::size_t(i) * n + perm[i]];
    if (total < best.total) {
      best.total = total;
      best.col_of_row = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace hoidet::train
