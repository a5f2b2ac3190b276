// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Built-in gradient audit: finite-difference checks over the differentiable
// core (deformable sampling, the attention module, focal loss, generalized
// IoU, box composition, and the assembled training loss), runnable from the
// command line and from the acceptance suite.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hoidet/config.hpp"
#include "hoidet/grad_check.hpp"
#include "hoidet/loss.hpp"
#include "hoidet/model.hpp"
#include "hoidet/ops.hpp"
#include "hoidet/params.hpp"
#include "hoidet/rng.hpp"
#include "hoidet/transformer.hpp"

namespace hoidet::check {

struct GradAudit {
  std::string name;
  int trials = 0;
  double max_rel_err = 0;
  bool ok = true;
};

namespace internal {

// Normalized coordinate whose pixel image sits away from the bilinear grid
// lines, so central differences stay on one smooth piece.
inline double safe_coord(Rng& rng, int extent) {
  const int cell = int(rng.uniform_int(0, extent - 2));
  const double pixel = double(cell) + rng.uniform(0.15, 0.85);
  return (pixel + 0.5) / double(extent);
}

inline void fold(GradAudit& audit, const GradCheckResult& r) {
  audit.max_rel_err = std::max(audit.max_rel_err, r.max_rel_err);
  audit.ok = audit.ok && r.ok;
  ++audit.trials;
}

// True when a matched prediction/target box pair sits at least `margin` away
// from every piecewise boundary of the L1 and generalized-IoU terms (absolute
// value at coordinate equality, corner min/max ties, zero-width overlap), so
// a central difference never straddles two branches.
inline bool box_pair_kink_safe(const Box& p, const Box& t, double margin) {
  if (std::abs(p.cx - t.cx) < margin || std::abs(p.cy - t.cy) < margin ||
      std::abs(p.w - t.w) < margin || std::abs(p.h - t.h) < margin)
    return false;
  const Corners a = to_corners(p), b = to_corners(t);
  if (std::abs(a.x1 - b.x1) < margin || std::abs(a.x2 - b.x2) < margin ||
      std::abs(a.y1 - b.y1) < margin || std::abs(a.y2 - b.y2) < margin)
    return false;
  if (std::abs(std::min(a.x2, b.x2) - std::max(a.x1, b.x1)) < margin) return false;
  if (std::abs(std::min(a.y2, b.y2) - std::max(a.y1, b.y1)) < margin) return false;
  return true;
}

}  // namespace internal

// Fused multi-scale sampling op: value rows, locations and mixing weights
// are all leaves.
inline GradAudit audit_deform_sample(std::uint64_t seed, int trials, double tolerance) {
  GradAudit audit{"deform_sample", 0, 0, true};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + std::uint64_t(t) * 7919);
    const int heads = 2, points = 2, channels = 3;
    std::vector<LevelSpec> levels = {{5, 6, 0}, {3, 3, 30}};
    const int ns = 30 + 9, queries = 3;
    const int taps = heads * int(levels.size()) * points;

    std::vector<Scalar> vals(std::size_t(ns) * heads * channels);
    for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
    std::vector<Scalar> locs(std::size_t(queries) * taps * 2);
    for (int q = 0; q < queries; ++q)
      for (int m = 0; m < heads; ++m)
        for (std::size_t l = 0; l < levels.size(); ++l)
          for (int k = 0; k < points; ++k) {
            const std::size_t base =
                ((std::size_t(q) * heads + m) * levels.size() + l) * points + k;
            locs[base * 2 + 0] = internal::safe_coord(rng, levels[l].w);
            locs[base * 2 + 1] = internal::safe_coord(rng, levels[l].h);
          }
    std::vector<Scalar> weights(std::size_t(queries) * taps);
    for (auto& w : weights) w = rng.uniform(0.05, 1.0);

    Tensor value({ns, heads * channels}, vals);
    Tensor loc({queries, taps * 2}, locs);
    Tensor weight({queries, taps}, weights);
    value.set_requires_grad(true);
    loc.set_requires_grad(true);
    weight.set_requires_grad(true);

    GradCheckOptions opt;
    opt.tolerance = tolerance;
    auto r = finite_difference_check(
        {value, loc, weight},
        [&] { return sum_all(deform_sample(value, levels, heads, loc, weight)); }, opt);
    internal::fold(audit, r);
  }
  return audit;
}

// Whole attention module driven by a leaf query, with every projection
// parameter also a leaf. Reference points keep a wide margin so the tiny
// finite-difference steps cannot push a sampling tap across a grid line.
inline GradAudit audit_ms_deform_attn(std::uint64_t seed, int trials, double tolerance) {
  GradAudit audit{"ms_deform_attn", 0, 0, true};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + std::uint64_t(t) * 104729);
    transformer::Sizes sz;
    sz.heads = 2;
    sz.points = 2;
    sz.layers = 1;
    sz.queries = 2;
    sz.model_dim = 4;
    sz.ffn_dim = 8;
    sz.levels = 2;
    ParamStore store;
    transformer::MsDeformAttn attn("attn", sz, store, rng);
    // small random offsets replace the ring bias so taps scatter but stay
    // far from both the grid lines and the map border
    for (auto& v : store.get("attn.offset.bias").mutable_values()) v = rng.uniform(-0.3, 0.3);
    for (auto& v : store.get("attn.logit.weight").mutable_values()) v = rng.uniform(-0.5, 0.5);
    for (auto& v : store.get("attn.logit.bias").mutable_values()) v = rng.uniform(-0.5, 0.5);

    const int h = 8, w = 8;
    std::vector<LevelSpec> levels = {{h, w, 0}, {4, 4, h * w}};
    const int ns = h * w + 16;
    std::vector<Scalar> mem(std::size_t(ns) * 4);
    for (auto& v : mem) v = rng.uniform(-1.0, 1.0);
    Tensor memory({ns, 4}, mem);
    memory.set_requires_grad(true);
    std::vector<Scalar> qv(std::size_t(sz.queries) * 4);
    for (auto& v : qv) v = rng.uniform(-0.5, 0.5);
    Tensor query({sz.queries, 4}, qv);
    query.set_requires_grad(true);
    Tensor refs({sz.queries, 2},
                {rng.uniform(0.35, 0.65), rng.uniform(0.35, 0.65), rng.uniform(0.35, 0.65),
                 rng.uniform(0.35, 0.65)});
    std::vector<Scalar> valid(std::size_t(ns), 1.0);

    std::vector<Tensor> leaves = {query, memory};
    for (const std::string& name : store.names()) leaves.push_back(store.get(name));
    GradCheckOptions opt;
    opt.tolerance = tolerance;
    auto r = finite_difference_check(
        leaves, [&] { return sum_all(attn.forward(query, refs, memory, valid, levels)); }, opt);
    internal::fold(audit, r);
  }
  return audit;
}

inline GradAudit audit_focal_loss(std::uint64_t seed, int trials, double tolerance) {
  GradAudit audit{"focal_loss", 0, 0, true};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + std::uint64_t(t) * 15485863);
    const int n = 4, k = 5;
    std::vector<Scalar> lv(std::size_t(n) * k), tv(std::size_t(n) * k);
    for (auto& v : lv) v = rng.uniform(-4.0, 4.0);
    for (auto& v : tv) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
    Tensor logits({n, k}, lv);
    logits.set_requires_grad(true);
    Tensor targets({n, k}, tv);
    GradCheckOptions opt;
    opt.tolerance = tolerance;
    auto r = finite_difference_check(
        {logits}, [&] { return sum_all(train::focal_loss(logits, targets, 0.25, 2.0)); }, opt);
    internal::fold(audit, r);
  }
  return audit;
}

inline GradAudit audit_giou(std::uint64_t seed, int trials, double tolerance) {
  GradAudit audit{"giou", 0, 0, true};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + std::uint64_t(t) * 32452843);
    const int n = 5;
    std::vector<Scalar> av, bv;
    for (int i = 0; i < n; ++i) {
      // well-formed boxes with distinct corners so min/max stay one-sided
      av.insert(av.end(), {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.1, 0.25),
                           rng.uniform(0.1, 0.25)});
      bv.insert(bv.end(), {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.26, 0.4),
                           rng.uniform(0.26, 0.4)});
    }
    Tensor a({n, 4}, av);
    Tensor b({n, 4}, bv);
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    GradCheckOptions opt;
    opt.tolerance = tolerance;
    auto r = finite_difference_check({a, b}, [&] { return sum_all(giou_graph(a, b)); }, opt);
    internal::fold(audit, r);
  }
  return audit;
}

inline GradAudit audit_compose_boxes(std::uint64_t seed, int trials, double tolerance) {
  GradAudit audit{"compose_boxes", 0, 0, true};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + std::uint64_t(t) * 49979687);
    const int n = 6;
    std::vector<Scalar> dv(std::size_t(n) * 4), av(std::size_t(n) * 2);
    for (auto& v : dv) v = rng.uniform(-1.5, 1.5);
    for (auto& v : av) v = rng.uniform(0.1, 0.9);
    Tensor deltas({n, 4}, dv);
    deltas.set_requires_grad(true);
    Tensor anchors({n, 2}, av);
    GradCheckOptions opt;
    opt.tolerance = tolerance;
    const BoxCompose mode = t % 2 == 0 ? BoxCompose::kInverseSigmoid : BoxCompose::kLiteralAdd;
    auto r = finite_difference_check(
        {deltas}, [&] { return sum_all(compose_boxes(deltas, anchors, mode)); }, opt);
    internal::fold(audit, r);
  }
  return audit;
}

// Assembled training loss at desk-scale shapes. The matching is computed
// once per trial and held fixed, so the finite-difference probe sees the
// smooth branch the analytic gradient lives on.
inline GradAudit audit_compute_loss(std::uint64_t seed, int trials, double tolerance) {
  GradAudit audit{"compute_loss", 0, 0, true};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + std::uint64_t(t) * 86028121);
    const int nq = 6, ko = 2, ka = 3, layers = 2;
    const double margin = 1e-3;  // keeps |pred - gt| branches clear of the probe
    LossConfig cfg;

    std::vector<Tensor> leaves;
    std::vector<Tensor> deltas_h(layers), deltas_o(layers), logits_o(layers), logits_a(layers);
    train::GroundTruthSet gts;
    std::vector<train::MatchResult> matches;

    Tensor anchors;
    auto build = [&] {
      std::vector<LayerPrediction> out;
      for (int l = 0; l < layers; ++l) {
        LayerPrediction lp;
        lp.human_boxes = compose_boxes(deltas_h[std::size_t(l)], anchors);
        lp.object_boxes = compose_boxes(deltas_o[std::size_t(l)], anchors);
        lp.object_logits = logits_o[std::size_t(l)];
        lp.action_logits = logits_a[std::size_t(l)];
        out.push_back(lp);
      }
      return out;
    };

    // redraw until every matched pair is clear of the loss kinks
    for (int attempt = 0; attempt < 200; ++attempt) {
      leaves.clear();
      matches.clear();
      gts.clear();

      std::vector<Scalar> anchor_vals;
      for (int q = 0; q < nq; ++q) {
        anchor_vals.push_back(rng.uniform(0.2, 0.8));
        anchor_vals.push_back(rng.uniform(0.2, 0.8));
      }
      anchors = Tensor({nq, 2}, anchor_vals);

      auto leaf = [&](Shape shape, double lo, double hi) {
        std::vector<Scalar> v(std::size_t(std::max(1, shape[0])) * std::size_t(shape[1]));
        for (auto& x : v) x = rng.uniform(lo, hi);
        Tensor t_(shape, v);
        t_.set_requires_grad(true);
        leaves.push_back(t_);
        return t_;
      };
      for (int l = 0; l < layers; ++l) {
        deltas_h[std::size_t(l)] = leaf({nq, 4}, -0.8, 0.8);
        deltas_o[std::size_t(l)] = leaf({nq, 4}, -0.8, 0.8);
        logits_o[std::size_t(l)] = leaf({nq, ko + 1}, -2.0, 2.0);
        logits_a[std::size_t(l)] = leaf({nq, ka}, -2.0, 2.0);
      }

      const int num_gt = 1 + t % 3;
      for (int g = 0; g < num_gt; ++g) {
        train::HOIAnnotation a;
        a.human = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.15, 0.35),
                   rng.uniform(0.15, 0.35)};
        a.object = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.15, 0.35),
                    rng.uniform(0.15, 0.35)};
        a.object_class = int(rng.uniform_int(0, ko - 1));
        a.actions = {int(rng.uniform_int(0, ka - 1))};
        gts.push_back(a);
      }

      NoGradGuard guard;
      bool safe = true;
      for (const auto& lp : build()) {
        train::MatchResult m = train::match_layer(lp, gts, cfg);
        const auto& hv = lp.human_boxes.values();
        const auto& ov = lp.object_boxes.values();
        for (int q = 0; q < nq && safe; ++q) {
          const int col = m.col_of_row[q];
          if (col >= static_cast<int>(gts.size())) continue;
          const Box ph{double(hv[std::size_t(q) * 4 + 0]), double(hv[std::size_t(q) * 4 + 1]),
                       double(hv[std::size_t(q) * 4 + 2]), double(hv[std::size_t(q) * 4 + 3])};
          const Box po{double(ov[std::size_t(q) * 4 + 0]), double(ov[std::size_t(q) * 4 + 1]),
                       double(ov[std::size_t(q) * 4 + 2]), double(ov[std::size_t(q) * 4 + 3])};
          safe = internal::box_pair_kink_safe(ph, gts[std::size_t(col)].human, margin) &&
                 internal::box_pair_kink_safe(po, gts[std::size_t(col)].object, margin);
        }
        matches.push_back(m);
        if (!safe) break;
      }
      if (safe) break;
    }

    GradCheckOptions opt;
    opt.tolerance = tolerance;
    opt.max_entries_per_input = 12;
    auto r = finite_difference_check(
        leaves, [&] { return train::compute_loss(build(), gts, matches, cfg); }, opt);
    internal::fold(audit, r);
  }
  return audit;
}

// The whole differentiable surface, one call. Per-op trial counts scale off
// `trials`; heavier graphs run fewer rounds.
inline std::vector<GradAudit> run_grad_suite(std::uint64_t seed, int trials, double tolerance) {
  std::vector<GradAudit> out;
  out.push_back(audit_deform_sample(seed, trials, tolerance));
  out.push_back(audit_ms_deform_attn(seed + 1, std::max(1, trials / 4), tolerance));
  out.push_back(audit_focal_loss(seed + 2, trials, tolerance));
  out.push_back(audit_giou(seed + 3, trials, tolerance));
  out.push_back(audit_compose_boxes(seed + 4, trials, tolerance));
  out.push_back(audit_compute_loss(seed + 5, std::max(1, trials / 4), tolerance));
  return out;
}

}  // namespace hoidet::check
