// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Box geometry in two flavors: plain scalar routines for matching, NMS and
// evaluation, and graph-building routines for the regression losses.

#pragma once

#include <algorithm>
#include <cmath>

#include "hoidet/ops.hpp"
#include "hoidet/tensor.hpp"

namespace hoidet {

// Center-size box, coordinates normalized to [0,1] unless stated otherwise.
struct Box {
  double cx = 0, cy = 0, w = 0, h = 0;
};

// Corner box (x1,y1,x2,y2).
struct Corners {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double area() const { return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1); }
};

inline Corners to_corners(const Box& b) {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

inline Box to_center_size(const Corners& c) {
  return {(c.x1 + c.x2) / 2, (c.y1 + c.y2) / 2, c.x2 - c.x1, c.y2 - c.y1};
}

// IoU on corner boxes. Zero-area operands yield 0 against everything,
// including themselves, so degenerate boxes can never suppress or match.
inline double iou(const Corners& a, const Corners& b) {
  const double aa = a.area(), ab = b.area();
  if (aa <= 0.0 || ab <= 0.0) return 0.0;
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  return inter / (aa + ab - inter);
}

inline double giou(const Corners& a, const Corners& b) {
  const double aa = a.area(), ab = b.area();
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = aa + ab - inter;
  const double ex = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ey = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double enc = ex * ey;
  if (uni <= 0.0 || enc <= 0.0) return -1.0;
  return inter / uni - (enc - uni) / enc;
}

inline double iou(const Box& a, const Box& b) { return iou(to_corners(a), to_corners(b)); }
inline double giou(const Box& a, const Box& b) { return giou(to_corners(a), to_corners(b)); }

// ---------------------------------------------------------------------------
// graph-building variants
// ---------------------------------------------------------------------------

enum class BoxCompose {
  kInverseSigmoid,  // c = sigmoid(inv_sigmoid(p) + d), the default
  kLiteralAdd,      // c = clamp01(p + d), ablation variant
};

// deltas [N,4] raw head output (dx, dy, w_raw, h_raw); anchors [N,2] in
// (0,1)^2. Returns [N,4] center-size boxes, every coordinate in (0,1).
// Zero delta reproduces the anchor center exactly in both modes.
inline Tensor compose_boxes(const Tensor& deltas, const Tensor& anchors,
                            BoxCompose mode = BoxCompose::kInverseSigmoid) {
  detail::require(deltas.ndim() == 2 && deltas.dim(1) == 4, "compose_boxes: deltas must be [N,4]");
  detail::require(anchors.ndim() == 2 && anchors.dim(1) == 2,
                  "compose_boxes: anchors must be [N,2]");
  detail::require(deltas.dim(0) == anchors.dim(0), "compose_boxes: row mismatch");
  Tensor center_delta = slice_cols(deltas, 0, 2);
  Tensor size_raw = slice_cols(deltas, 2, 2);
  Tensor center = mode == BoxCompose::kInverseSigmoid
                      ? sigmoid(add(inverse_sigmoid(anchors), center_delta))
                      : clamp01(add(anchors, center_delta));
  return concat_cols({center, sigmoid(size_raw)});
}

// Per-row generalized IoU between two [N,4] center-size box tensors.
// Returns [N,1]. Sizes must be positive (sigmoid-composed boxes are), so the
// union is bounded away from zero.
inline Tensor giou_graph(const Tensor& a, const Tensor& b) {
  detail::require(a.ndim() == 2 && a.dim(1) == 4 && b.ndim() == 2 && b.dim(1) == 4,
                  "giou_graph: boxes must be [N,4]");
  detail::require(a.dim(0) == b.dim(0), "giou_graph: row mismatch");
  auto corners = [](const Tensor& t) {
    Tensor c = slice_cols(t, 0, 2);
    Tensor s = scale(slice_cols(t, 2, 2), 0.5);
    return std::pair<Tensor, Tensor>{sub(c, s), add(c, s)};  // lo, hi
  };
  auto [alo, ahi] = corners(a);
  auto [blo, bhi] = corners(b);
  auto area = [](const Tensor& lo, const Tensor& hi) {
    Tensor d = sub(hi, lo);
    return mul(slice_cols(d, 0, 1), slice_cols(d, 1, 1));
  };
  Tensor area_a = area(alo, ahi);
  Tensor area_b = area(blo, bhi);
  Tensor inter_d = relu(sub(min_el(ahi, bhi), max_el(alo, blo)));
  Tensor inter = mul(slice_cols(inter_d, 0, 1), slice_cols(inter_d, 1, 1));
  Tensor uni = sub(add(area_a, area_b), inter);
  Tensor enc_d = sub(max_el(ahi, bhi), min_el(alo, blo));
  Tensor enc = mul(slice_cols(enc_d, 0, 1), slice_cols(enc_d, 1, 1));
  return sub(div(inter, uni), div(sub(enc, uni), enc));
}

}  // namespace hoidet
