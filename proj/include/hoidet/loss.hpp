// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Set-matching supervision: focal classification terms over every query,
// box L1 + generalized-IoU terms over the matched pairs, assembled per
// decoder layer with a Hungarian matching computed on that layer's outputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hoidet/annotations.hpp"
#include "hoidet/config.hpp"
#include "hoidet/geometry.hpp"
#include "hoidet/matching.hpp"
#include "hoidet/model.hpp"
#include "hoidet/ops.hpp"

namespace hoidet::train {

// ---------------------------------------------------------------------------
// focal loss
// ---------------------------------------------------------------------------

// Elementwise focal term on logits given 0/1 targets, assembled from softplus
// and exp so no intermediate saturates:
//   target=1: alpha * (1-p)^gamma * -log(p)   = alpha * e^{-g*sp(x)} * sp(-x)
//   target=0: (1-alpha) * p^gamma * -log(1-p) = (1-alpha) * e^{-g*sp(-x)} * sp(x)
// Callers mean-reduce. `targets` is a constant 0/1 mask of the same shape.
inline Tensor focal_loss(const Tensor& logits, const Tensor& targets, double alpha,
                         double gamma) {
  hoidet::detail::require_same_shape(logits, targets, "focal_loss");
  Tensor sp_pos = softplus(logits);        // -log sigmoid(-x)
  Tensor sp_neg = softplus(neg(logits));   // -log sigmoid(x)
  Tensor pos_term = scale(mul(exp_t(scale(sp_pos, -gamma)), sp_neg), alpha);
  Tensor neg_term = scale(mul(exp_t(scale(sp_neg, -gamma)), sp_pos), 1.0 - alpha);
  Tensor one_minus = add_scalar(neg(targets), 1.0);
  return add(mul(targets, pos_term), mul(one_minus, neg_term));
}

// Plain-value focal terms for the matching cost.
inline double focal_pos_cost(double logit, double alpha, double gamma) {
  const double sp_pos = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  const double sp_neg = std::max(-logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return alpha * std::exp(-gamma * sp_pos) * sp_neg;
}

inline double focal_neg_cost(double logit, double alpha, double gamma) {
  const double sp_pos = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  const double sp_neg = std::max(-logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return (1.0 - alpha) * std::exp(-gamma * sp_neg) * sp_pos;
}

// ---------------------------------------------------------------------------
// matching
// ---------------------------------------------------------------------------

// Pairwise assignment cost between one query's outputs and one annotation.
// The classification parts use the positive-minus-negative focal form so a
// confident correct score is rewarded relative to staying negative.
inline double match_cost(const LayerPrediction& pred, int query, const HOIAnnotation& gt,
                         const LossConfig& cfg) {
  const auto& ol = pred.object_logits.values();
  const int ko1 = pred.object_logits.dim(1);
  const double obj_logit = double(ol[std::size_t(query) * ko1 + gt.object_class]);
  const double cls = focal_pos_cost(obj_logit, cfg.focal_alpha, cfg.focal_gamma) -
                     focal_neg_cost(obj_logit, cfg.focal_alpha, cfg.focal_gamma);

  double act = 0.0;
  if (!gt.actions.empty()) {
    const auto& al = pred.action_logits.values();
    const int ka = pred.action_logits.dim(1);
    for (int a : gt.actions) {
      const double logit = double(al[std::size_t(query) * ka + a]);
      act += focal_pos_cost(logit, cfg.focal_alpha, cfg.focal_gamma) -
             focal_neg_cost(logit, cfg.focal_alpha, cfg.focal_gamma);
    }
    act /= double(gt.actions.size());
  }

  auto box_of = [](const Tensor& t, int row) {
    const auto& v = t.values();
    return Box{double(v[std::size_t(row) * 4 + 0]), double(v[std::size_t(row) * 4 + 1]),
               double(v[std::size_t(row) * 4 + 2]), double(v[std::size_t(row) * 4 + 3])};
  };
  const Box ph = box_of(pred.human_boxes, query);
  const Box po = box_of(pred.object_boxes, query);
  double l1 = std::abs(ph.cx - gt.human.cx) + std::abs(ph.cy - gt.human.cy) +
              std::abs(ph.w - gt.human.w) + std::abs(ph.h - gt.human.h) +
              std::abs(po.cx - gt.object.cx) + std::abs(po.cy - gt.object.cy) +
              std::abs(po.w - gt.object.w) + std::abs(po.h - gt.object.h);
  const double giou_cost = -giou(ph, gt.human) - giou(po, gt.object);

  return cfg.lambda_cls * cls + cfg.lambda_act * act + cfg.lambda_l1 * l1 +
         cfg.lambda_giou * giou_cost;
}

// N_q x N_q matrix: real annotations occupy the first columns, the remaining
// phi columns are zero so unmatched queries cost nothing here.
inline std::vector<double> build_cost_matrix(const LayerPrediction& pred,
                                             const GroundTruthSet& gts,
                                             const LossConfig& cfg) {
  const int nq = pred.object_logits.dim(0);
  if (static_cast<int>(gts.size()) > nq)
    throw std::invalid_argument("build_cost_matrix: more annotations than queries");
  std::vector<double> cost(std::size_t(nq) * nq, 0.0);
  for (int q = 0; q < nq; ++q)
    for (std::size_t g = 0; g < gts.size(); ++g)
      cost[std::size_t(q) * nq + g] = match_cost(pred, q, gts[g], cfg);
  return cost;
}

inline MatchResult match_layer(const LayerPrediction& pred, const GroundTruthSet& gts,
                               const LossConfig& cfg) {
  const int nq = pred.object_logits.dim(0);
  return hungarian_match(build_cost_matrix(pred, gts, cfg), nq);
}

// ---------------------------------------------------------------------------
// loss assembly
// ---------------------------------------------------------------------------

struct LayerTerms {
  double object_cls = 0, action_cls = 0;
  double l1_human = 0, l1_object = 0;
  double giou_human = 0, giou_object = 0;
};

struct LossBreakdown {
  std::vector<LayerTerms> per_layer;
  double total = 0;
};

// One layer's weighted loss as a graph tensor. The matching is an input, not
// recomputed, so gradients are taken at a fixed assignment.
inline Tensor layer_loss(const LayerPrediction& pred, const GroundTruthSet& gts,
                         const MatchResult& match, const LossConfig& cfg,
                         LayerTerms* terms) {
  const int nq = pred.object_logits.dim(0);
  const int ko1 = pred.object_logits.dim(1);
  const int ka = pred.action_logits.dim(1);
  const int phi = ko1 - 1;

  // classification targets from the assignment
  std::vector<Scalar> obj_t(std::size_t(nq) * ko1, Scalar(0));
  std::vector<Scalar> act_t(std::size_t(nq) * ka, Scalar(0));
  std::vector<int> matched_q;
  std::vector<Scalar> gt_h, gt_o;
  for (int q = 0; q < nq; ++q) {
    const int col = match.col_of_row[q];
    if (col < static_cast<int>(gts.size())) {
      const HOIAnnotation& gt = gts[std::size_t(col)];
      obj_t[std::size_t(q) * ko1 + gt.object_class] = 1;
      for (int a : gt.actions) act_t[std::size_t(q) * ka + a] = 1;
      matched_q.push_back(q);
      gt_h.insert(gt_h.end(), {Scalar(gt.human.cx), Scalar(gt.human.cy), Scalar(gt.human.w),
                               Scalar(gt.human.h)});
      gt_o.insert(gt_o.end(), {Scalar(gt.object.cx), Scalar(gt.object.cy),
                               Scalar(gt.object.w), Scalar(gt.object.h)});
    } else {
      obj_t[std::size_t(q) * ko1 + phi] = 1;
    }
  }

  Tensor obj_loss = mean_all(focal_loss(pred.object_logits, Tensor({nq, ko1}, obj_t),
                                        cfg.focal_alpha, cfg.focal_gamma));
  Tensor act_loss = mean_all(focal_loss(pred.action_logits, Tensor({nq, ka}, act_t),
                                        cfg.focal_alpha, cfg.focal_gamma));

  Tensor total = add(scale(obj_loss, cfg.lambda_cls), scale(act_loss, cfg.lambda_act));

  Tensor l1_h = Tensor::scalar(0), l1_o = Tensor::scalar(0);
  Tensor gi_h = Tensor::scalar(0), gi_o = Tensor::scalar(0);
  const int p = static_cast<int>(matched_q.size());
  if (p > 0) {
    const Scalar inv_p = Scalar(1) / Scalar(p);
    Tensor ph = gather_rows(pred.human_boxes, matched_q);
    Tensor po = gather_rows(pred.object_boxes, matched_q);
    Tensor th({p, 4}, gt_h), to({p, 4}, gt_o);
    l1_h = scale(sum_all(abs_t(sub(ph, th))), inv_p);
    l1_o = scale(sum_all(abs_t(sub(po, to))), inv_p);
    gi_h = scale(sum_all(add_scalar(neg(giou_graph(ph, th)), 1.0)), inv_p);
    gi_o = scale(sum_all(add_scalar(neg(giou_graph(po, to)), 1.0)), inv_p);
    total = add(total, scale(add(l1_h, l1_o), cfg.lambda_l1));
    total = add(total, scale(add(gi_h, gi_o), cfg.lambda_giou));
  }

  if (terms) {
    terms->object_cls = double(obj_loss.item());
    terms->action_cls = double(act_loss.item());
    terms->l1_human = double(l1_h.item());
    terms->l1_object = double(l1_o.item());
    terms->giou_human = double(gi_h.item());
    terms->giou_object = double(gi_o.item());
  }
  return total;
}

// Weighted sum over all decoder layers (auxiliary supervision included).
inline Tensor compute_loss(const std::vector<LayerPrediction>& layers,
                           const GroundTruthSet& gts,
                           const std::vector<MatchResult>& matches, const LossConfig& cfg,
                           LossBreakdown* breakdown = nullptr) {
  if (layers.empty()) throw std::invalid_argument("compute_loss: no layers");
  if (matches.size() != layers.size())
    throw std::invalid_argument("compute_loss: one matching per layer required");
  if (breakdown) breakdown->per_layer.assign(layers.size(), LayerTerms{});
  Tensor total = Tensor::scalar(0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerTerms terms;
    Tensor lt = layer_loss(layers[l], gts, matches[l], cfg, breakdown ? &terms : nullptr);
    if (breakdown) breakdown->per_layer[l] = terms;
    total = add(total, lt);
  }
  if (breakdown) breakdown->total = double(total.item());
  return total;
}

// Convenience: match every layer independently, then assemble.
inline Tensor compute_loss_matched(const std::vector<LayerPrediction>& layers,
                                   const GroundTruthSet& gts, const LossConfig& cfg,
                                   LossBreakdown* breakdown = nullptr) {
  std::vector<MatchResult> matches;
  matches.reserve(layers.size());
  for (const auto& layer : layers) matches.push_back(match_layer(layer, gts, cfg));
  return compute_loss(layers, gts, matches, cfg, breakdown);
}

}  // namespace hoidet::train
