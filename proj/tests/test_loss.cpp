// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "hoidet/grad_check.hpp"
#include "hoidet/loss.hpp"
#include "hoidet/rng.hpp"

using namespace hoidet;
using namespace hoidet::train;

namespace {

// Head-output leaves plus anchors, composed into a LayerPrediction the same
// way the model does it.
struct FakeHead {
  Tensor human_delta, object_delta, object_logits, action_logits, anchors;

  FakeHead(Rng& rng, int nq, int ko, int ka) {
    auto rand = [&](Shape s, double lo, double hi) {
      std::vector<Scalar> v(shape_numel(s));
      for (auto& x : v) x = rng.uniform(lo, hi);
      return Tensor(std::move(s), std::move(v), true);
    };
    human_delta = rand({nq, 4}, -1.0, 1.0);
    object_delta = rand({nq, 4}, -1.0, 1.0);
    object_logits = rand({nq, ko + 1}, -2.0, 2.0);
    action_logits = rand({nq, ka}, -2.0, 2.0);
    anchors = rand({nq, 2}, 0.2, 0.8);
  }

  LayerPrediction compose() const {
    LayerPrediction lp;
    lp.human_boxes = compose_boxes(human_delta, anchors);
    lp.object_boxes = compose_boxes(object_delta, anchors);
    lp.object_logits = object_logits;
    lp.action_logits = action_logits;
    return lp;
  }

  std::vector<Tensor> leaves() const {
    return {human_delta, object_delta, object_logits, action_logits, anchors};
  }
};

GroundTruthSet small_gts(Rng& rng, int count, int ko, int ka) {
  GroundTruthSet gts;
  for (int i = 0; i < count; ++i) {
    HOIAnnotation a;
    a.human = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.1, 0.3),
               rng.uniform(0.1, 0.3)};
    a.object = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.1, 0.3),
                rng.uniform(0.1, 0.3)};
    a.object_class = int(rng.uniform_int(0, ko - 1));
    const int na = 1 + int(rng.uniform_int(0, 1));
    for (int k = 0; k < na; ++k) a.actions.push_back(int(rng.uniform_int(0, ka - 1)));
    std::sort(a.actions.begin(), a.actions.end());
    a.actions.erase(std::unique(a.actions.begin(), a.actions.end()), a.actions.end());
    gts.push_back(a);
  }
  return gts;
}

}  // namespace

TEST_CASE("focal loss hand values") {
  // logit 0 => p = 0.5; target 1: 0.25 * 0.25 * ln 2
  Tensor logits({1, 1}, {0.0});
  Tensor t1({1, 1}, {1.0});
  const double expect = 0.25 * 0.25 * std::log(2.0);
  CHECK_THAT(focal_loss(logits, t1, 0.25, 2.0).item(),
             Catch::Matchers::WithinAbs(expect, 1e-12));
  // gamma=0, alpha=0.5 halves the plain cross-entropy
  Tensor l2({1, 1}, {0.7});
  Tensor t0({1, 1}, {0.0});
  const double p = 1.0 / (1.0 + std::exp(-0.7));
  CHECK_THAT(focal_loss(l2, t0, 0.5, 0.0).item(),
             Catch::Matchers::WithinAbs(0.5 * -std::log(1.0 - p), 1e-12));
  CHECK_THAT(focal_loss(l2, t1, 0.5, 0.0).item(),
             Catch::Matchers::WithinAbs(0.5 * -std::log(p), 1e-12));
  // saturated correct prediction: loss vanishes
  Tensor big({1, 1}, {40.0});
  CHECK(focal_loss(big, t1, 0.25, 2.0).item() < 1e-15);
  // extreme logits stay finite in both directions
  Tensor ext({1, 2}, {700.0, -700.0});
  Tensor text({1, 2}, {0.0, 1.0});
  Tensor out = focal_loss(ext, text, 0.25, 2.0);
  CHECK(std::isfinite(out.value_at(0)));
  CHECK(std::isfinite(out.value_at(1)));
}

TEST_CASE("gradients: focal loss") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 2000);
    std::vector<Scalar> lv(12), tv(12);
    for (std::size_t i = 0; i < 12; ++i) {
      lv[i] = rng.uniform(-3.0, 3.0);
      tv[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    Tensor logits({3, 4}, lv, true);
    Tensor targets({3, 4}, tv);
    auto r = finite_difference_check(
        {logits}, [&] { return mean_all(focal_loss(logits, targets, 0.25, 2.0)); });
    INFO("err " << r.max_rel_err);
    CHECK(r.ok);
  }
}

TEST_CASE("match_cost grows with box distance") {
  Rng rng(3000);
  FakeHead head(rng, 4, 3, 4);
  LayerPrediction lp = head.compose();
  LossConfig cfg;
  HOIAnnotation near, far;
  const auto& hb = lp.human_boxes.values();
  near.human = {double(hb[0]), double(hb[1]), double(hb[2]), double(hb[3])};
  near.object = near.human;
  near.object_class = 0;
  near.actions = {1};
  far = near;
  far.human.cx = std::min(0.95, far.human.cx + 0.3);
  CHECK(match_cost(lp, 0, near, cfg) < match_cost(lp, 0, far, cfg));
}

TEST_CASE("hungarian on a real cost matrix equals brute force") {
  Rng rng(4000);
  for (int trial = 0; trial < 20; ++trial) {
    FakeHead head(rng, 5, 3, 4);
    LayerPrediction lp = head.compose();
    GroundTruthSet gts = small_gts(rng, 3, 3, 4);
    LossConfig cfg;
    auto cost = build_cost_matrix(lp, gts, cfg);
    auto h = hungarian_match(cost, 5);
    auto b = brute_force_match(cost, 5);
    CHECK(h.total == b.total);
  }
}

TEST_CASE("perfect saturated prediction has near-zero loss") {
  const int nq = 3, ko = 2, ka = 3;
  GroundTruthSet gts;
  HOIAnnotation a;
  a.human = {0.4, 0.4, 0.2, 0.2};
  a.object = {0.6, 0.6, 0.1, 0.1};
  a.object_class = 1;
  a.actions = {0, 2};
  gts.push_back(a);

  // query 0 carries the annotation exactly; the others are confident phi
  auto box_row = [](const Box& b) {
    return std::vector<Scalar>{Scalar(b.cx), Scalar(b.cy), Scalar(b.w), Scalar(b.h)};
  };
  std::vector<Scalar> hbox, obox;
  for (int q = 0; q < nq; ++q) {
    auto h = q == 0 ? box_row(a.human) : box_row({0.5, 0.5, 0.1, 0.1});
    auto o = q == 0 ? box_row(a.object) : box_row({0.5, 0.5, 0.1, 0.1});
    hbox.insert(hbox.end(), h.begin(), h.end());
    obox.insert(obox.end(), o.begin(), o.end());
  }
  std::vector<Scalar> ologit(std::size_t(nq) * (ko + 1), -40.0);
  ologit[0 * (ko + 1) + 1] = 40.0;        // query 0: class 1
  ologit[1 * (ko + 1) + ko] = 40.0;       // others: phi slot
  ologit[2 * (ko + 1) + ko] = 40.0;
  std::vector<Scalar> alogit(std::size_t(nq) * ka, -40.0);
  alogit[0 * ka + 0] = 40.0;
  alogit[0 * ka + 2] = 40.0;

  LayerPrediction lp;
  lp.human_boxes = Tensor({nq, 4}, hbox);
  lp.object_boxes = Tensor({nq, 4}, obox);
  lp.object_logits = Tensor({nq, ko + 1}, ologit);
  lp.action_logits = Tensor({nq, ka}, alogit);

  LossConfig cfg;
  LossBreakdown breakdown;
  compute_loss_matched({lp}, gts, cfg, &breakdown);
  const auto& t = breakdown.per_layer[0];
  CHECK(t.l1_human == 0.0);
  CHECK(t.l1_object == 0.0);
  CHECK_THAT(t.giou_human, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(t.giou_object, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK(t.object_cls < 1e-3);
  CHECK(t.action_cls < 1e-3);
}

TEST_CASE("empty ground truth leaves only classification terms") {
  Rng rng(5000);
  FakeHead head(rng, 4, 3, 4);
  LayerPrediction lp = head.compose();
  LossConfig cfg;
  LossBreakdown breakdown;
  compute_loss_matched({lp}, {}, cfg, &breakdown);
  const auto& t = breakdown.per_layer[0];
  CHECK(t.l1_human == 0.0);
  CHECK(t.l1_object == 0.0);
  CHECK(t.giou_human == 0.0);
  CHECK(t.giou_object == 0.0);
  CHECK(t.object_cls > 0.0);
  CHECK(breakdown.total > 0.0);
}

TEST_CASE("loss is invariant to ground-truth order") {
  Rng rng(6000);
  FakeHead head(rng, 6, 3, 4);
  LayerPrediction lp = head.compose();
  GroundTruthSet gts = small_gts(rng, 4, 3, 4);
  LossConfig cfg;
  LossBreakdown fwd, rev;
  compute_loss_matched({lp}, gts, cfg, &fwd);
  GroundTruthSet reversed(gts.rbegin(), gts.rend());
  compute_loss_matched({lp}, reversed, cfg, &rev);
  CHECK_THAT(fwd.total, Catch::Matchers::WithinAbs(rev.total, 1e-10));
}

TEST_CASE("auxiliary layers each contribute to the total") {
  Rng rng(7000);
  FakeHead h1(rng, 4, 3, 4), h2(rng, 4, 3, 4);
  GroundTruthSet gts = small_gts(rng, 2, 3, 4);
  LossConfig cfg;
  LossBreakdown one, two;
  compute_loss_matched({h1.compose()}, gts, cfg, &one);
  compute_loss_matched({h1.compose(), h2.compose()}, gts, cfg, &two);
  REQUIRE(two.per_layer.size() == 2);
  CHECK(two.total > one.total);
  CHECK_THAT(two.per_layer[0].object_cls,
             Catch::Matchers::WithinAbs(one.per_layer[0].object_cls, 1e-12));
}

TEST_CASE("gradients: full loss graph at a fixed matching") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 8000);
    FakeHead head(rng, 5, 3, 4);
    GroundTruthSet gts = small_gts(rng, 3, 3, 4);
    LossConfig cfg;
    // matching held fixed across the probe evaluations
    std::vector<MatchResult> matches = {match_layer(head.compose(), gts, cfg)};
    auto r = finite_difference_check(head.leaves(), [&] {
      return compute_loss({head.compose()}, gts, matches, cfg);
    });
    INFO("seed " << seed << " err " << r.max_rel_err << " input " << r.worst_input
                 << " entry " << r.worst_entry);
    CHECK(r.ok);
  }
}
