// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Prediction post-processing: expansion of per-query outputs into scored
// human-object instances, top-K query selection, and pairwise-IoU NMS run
// independently per action class.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoidet/geometry.hpp"
#include "hoidet/tensor.hpp"

namespace hoidet::post {

struct HOIInstance {
  Box human;                 // normalized center-size
  Box object;                // normalized center-size
  int object_class = 0;      // in [0, K_o)
  int action_class = 0;      // in [0, K_a)
  double object_score = 0;   // c_o
  double action_score = 0;   // c_a
  double hoi_score = 0;      // c_o * c_a
  int anchor_index = 0;      // source query
};

enum class IouVariant { kHuman, kObject, kCombined };
enum class ScoreVariant { kAction, kObject, kProduct };

inline IouVariant iou_variant_from_string(const std::string& s) {
  if (s == "human" || s == "h") return IouVariant::kHuman;
  if (s == "object" || s == "o") return IouVariant::kObject;
  if (s == "combined" || s == "comb") return IouVariant::kCombined;
  throw std::invalid_argument("unknown IoU variant: " + s);
}

inline ScoreVariant score_variant_from_string(const std::string& s) {
  if (s == "action" || s == "ca") return ScoreVariant::kAction;
  if (s == "object" || s == "co") return ScoreVariant::kObject;
  if (s == "product" || s == "caco") return ScoreVariant::kProduct;
  throw std::invalid_argument("unknown score variant: " + s);
}

struct NMSConfig {
  int topk = 100;      // N_t queries kept before NMS
  double delta = 0.5;  // suppression threshold on the pairwise IoU
  IouVariant iou = IouVariant::kCombined;
  ScoreVariant score = ScoreVariant::kObject;
};

// Expands one decoder layer's outputs into N_q * K_a candidate instances.
// Per query the object class and score come from the softmax over the
// object logits restricted to the real classes (the trailing no-object slot
// competes in the normalization but is never emitted), and each action class
// contributes one instance with its sigmoid score.
inline std::vector<HOIInstance> expand_instances(const Tensor& human_boxes,
                                                 const Tensor& object_boxes,
                                                 const Tensor& object_logits,
                                                 const Tensor& action_logits) {
  detail::require(human_boxes.ndim() == 2 && human_boxes.dim(1) == 4,
                  "expand_instances: human boxes must be [Nq,4]");
  detail::require(object_boxes.ndim() == 2 && object_boxes.dim(1) == 4,
                  "expand_instances: object boxes must be [Nq,4]");
  detail::require(object_logits.ndim() == 2 && object_logits.dim(1) >= 2,
                  "expand_instances: object logits must be [Nq,K_o+1]");
  detail::require(action_logits.ndim() == 2, "expand_instances: action logits must be [Nq,K_a]");
  const int nq = human_boxes.dim(0);
  detail::require(object_boxes.dim(0) == nq && object_logits.dim(0) == nq &&
                      action_logits.dim(0) == nq,
                  "expand_instances: row mismatch");
  const int ko = object_logits.dim(1) - 1;
  const int ka = action_logits.dim(1);

  std::vector<HOIInstance> out;
  out.reserve(std::size_t(nq) * ka);
  for (int q = 0; q < nq; ++q) {
    // softmax over all K_o+1 slots, stabilized by the row max
    double mx = object_logits.value_at(std::size_t(q) * (ko + 1));
    for (int c = 1; c <= ko; ++c)
      mx = std::max(mx, object_logits.value_at(std::size_t(q) * (ko + 1) + c));
    double denom = 0.0;
    for (int c = 0; c <= ko; ++c)
      denom += std::exp(object_logits.value_at(std::size_t(q) * (ko + 1) + c) - mx);
    int best_class = 0;
    double best_prob = -1.0;
    for (int c = 0; c < ko; ++c) {
      const double p = std::exp(object_logits.value_at(std::size_t(q) * (ko + 1) + c) - mx) / denom;
      if (p > best_prob) {
        best_prob = p;
        best_class = c;
      }
    }
    Box hb{human_boxes.value_at(std::size_t(q) * 4 + 0), human_boxes.value_at(std::size_t(q) * 4 + 1),
           human_boxes.value_at(std::size_t(q) * 4 + 2), human_boxes.value_at(std::size_t(q) * 4 + 3)};
    Box ob{object_boxes.value_at(std::size_t(q) * 4 + 0), object_boxes.value_at(std::size_t(q) * 4 + 1),
           object_boxes.value_at(std::size_t(q) * 4 + 2), object_boxes.value_at(std::size_t(q) * 4 + 3)};
    for (int a = 0; a < ka; ++a) {
      HOIInstance inst;
      inst.human = hb;
      inst.object = ob;
      inst.object_class = best_class;
      inst.object_score = best_prob;
      inst.action_class = a;
      inst.action_score = 1.0 / (1.0 + std::exp(-action_logits.value_at(std::size_t(q) * ka + a)));
      inst.hoi_score = inst.object_score * inst.action_score;
      inst.anchor_index = q;
      out.push_back(inst);
    }
  }
  return out;
}

// Per-query ranking score for top-K selection. Variants involving the action
// score reduce over a query's actions with a max, since the kept unit is the
// whole query rather than the individual (query, action) instance.
inline std::vector<HOIInstance> topk_filter(const std::vector<HOIInstance>& instances,
                                            const NMSConfig& cfg) {
  detail::require(cfg.topk >= 1, "topk_filter: N_t must be >= 1");
  struct QueryScore {
    int anchor;
    double score;
  };
  std::vector<QueryScore> queries;
  for (const HOIInstance& inst : instances) {
    double s = 0.0;
    switch (cfg.score) {
      case ScoreVariant::kAction: s = inst.action_score; break;
      case ScoreVariant::kObject: s = inst.object_score; break;
      case ScoreVariant::kProduct: s = inst.object_score * inst.action_score; break;
    }
    auto it = std::find_if(queries.begin(), queries.end(),
                           [&](const QueryScore& q) { return q.anchor == inst.anchor_index; });
    if (it == queries.end()) {
      queries.push_back({inst.anchor_index, s});
    } else {
      it->score = std::max(it->score, s);
    }
  }
  std::sort(queries.begin(), queries.end(), [](const QueryScore& a, const QueryScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.anchor < b.anchor;
  });
  if (int(queries.size()) > cfg.topk) queries.resize(std::size_t(cfg.topk));

  std::vector<HOIInstance> out;
  for (const QueryScore& q : queries)
    for (const HOIInstance& inst : instances)
      if (inst.anchor_index == q.anchor) out.push_back(inst);
  return out;
}

// Pairwise IoU between two instances under the configured variant. The
// combined variant multiplies the human and object IoUs.
inline double pair_iou(const HOIInstance& a, const HOIInstance& b,
                       IouVariant variant = IouVariant::kCombined) {
  const double hi = iou(a.human, b.human);
  const double oi = iou(a.object, b.object);
  switch (variant) {
    case IouVariant::kHuman: return hi;
    case IouVariant::kObject: return oi;
    case IouVariant::kCombined: return hi * oi;
  }
  return 0.0;
}

// Canonical processing order: score descending, anchor then action ascending.
inline std::vector<int> canonical_order(const std::vector<HOIInstance>& v) {
  std::vector<int> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = int(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (v[std::size_t(a)].hoi_score != v[std::size_t(b)].hoi_score)
      return v[std::size_t(a)].hoi_score > v[std::size_t(b)].hoi_score;
    if (v[std::size_t(a)].anchor_index != v[std::size_t(b)].anchor_index)
      return v[std::size_t(a)].anchor_index < v[std::size_t(b)].anchor_index;
    return v[std::size_t(a)].action_class < v[std::size_t(b)].action_class;
  });
  return idx;
}

// Greedy NMS per action class: sweep in descending HOI-score order and drop
// any instance whose pairwise IoU with an already kept instance of the same
// action class exceeds delta. Output is in canonical order.
inline std::vector<HOIInstance> hoi_nms(const std::vector<HOIInstance>& instances,
                                        const NMSConfig& cfg) {
  detail::require(cfg.delta >= 0.0 && cfg.delta <= 1.0, "hoi_nms: delta must be in [0,1]");
  int max_action = -1;
  for (const HOIInstance& inst : instances) max_action = std::max(max_action, inst.action_class);

  std::vector<std::vector<int>> by_action(std::size_t(max_action + 1));
  const std::vector<int> order = canonical_order(instances);
  for (int i : order) by_action[std::size_t(instances[std::size_t(i)].action_class)].push_back(i);

  std::vector<char> kept(instances.size(), 0);
  for (const std::vector<int>& bucket : by_action) {
    std::vector<int> survivors;
    for (int i : bucket) {
      bool suppressed = false;
      for (int j : survivors) {
        if (pair_iou(instances[std::size_t(i)], instances[std::size_t(j)], cfg.iou) > cfg.delta) {
          suppressed = true;
          break;
        }
      }
      if (!suppressed) {
        survivors.push_back(i);
        kept[std::size_t(i)] = 1;
      }
    }
  }

  std::vector<HOIInstance> out;
  for (int i : order)
    if (kept[std::size_t(i)]) out.push_back(instances[std::size_t(i)]);
  return out;
}

// All-pairs reference for hoi_nms: walks the canonical order once and, for
// each candidate, rescans every earlier decision. Deliberately flat so its
// control flow shares nothing with the bucketed sweep above.
inline std::vector<HOIInstance> hoi_nms_reference(const std::vector<HOIInstance>& instances,
                                                  const NMSConfig& cfg) {
  const std::vector<int> order = canonical_order(instances);
  std::vector<char> kept(instances.size(), 0);
  for (std::size_t a = 0; a < order.size(); ++a) {
    const HOIInstance& cand = instances[std::size_t(order[a])];
    bool suppressed = false;
    for (std::size_t b = 0; b < a; ++b) {
      if (!kept[std::size_t(order[b])]) continue;
      const HOIInstance& prev = instances[std::size_t(order[b])];
      if (prev.action_class != cand.action_class) continue;
      if (pair_iou(cand, prev, cfg.iou) > cfg.delta) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept[std::size_t(order[a])] = 1;
  }
  std::vector<HOIInstance> out;
  for (int i : order)
    if (kept[std::size_t(i)]) out.push_back(instances[std::size_t(i)]);
  return out;
}

// Full chain applied to one image's expanded instances.
inline std::vector<HOIInstance> filter_instances(const std::vector<HOIInstance>& instances,
                                                 const NMSConfig& cfg) {
  return hoi_nms(topk_filter(instances, cfg), cfg);
}

}  // namespace hoidet::post
