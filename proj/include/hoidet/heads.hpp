// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Interaction head: four independent readouts per query embedding. Box
// deltas come from 3-layer FFNs whose final layers start at zero so boxes
// begin exactly on their anchors; classifiers are single linear layers whose
// biases start at the focal prior so training begins in the
// negatives-dominant regime.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hoidet/config.hpp"
#include "hoidet/geometry.hpp"
#include "hoidet/ops.hpp"
#include "hoidet/params.hpp"

namespace hoidet::head {

struct RawPrediction {
  Tensor human_delta;    // [Nq, 4]
  Tensor object_delta;   // [Nq, 4]
  Tensor object_logits;  // [Nq, K_o + 1], last slot = no-pair
  Tensor action_logits;  // [Nq, K_a], independent per-class sigmoids
};

class InteractionHead {
 public:
  InteractionHead(const Config& cfg, ParamStore& store, Rng& rng) {
    const int cd = cfg.backbone.model_dim;
    const int ko = cfg.head.object_classes;
    const int ka = cfg.head.action_classes;
    auto box_ffn = [&](const std::string& name, std::vector<Tensor>& w,
                       std::vector<Tensor>& b) {
      const int dims[4] = {cd, cd, cd, 4};
      for (int l = 0; l < 3; ++l) {
        const bool last = l == 2;
        const std::function<void(std::vector<Scalar>&)> fill =
            last ? std::function<void(std::vector<Scalar>&)>(init::zeros())
                 : std::function<void(std::vector<Scalar>&)>(init::trunc_normal(rng));
        w.push_back(store.create("head." + name + ".l" + std::to_string(l) + ".weight",
                                 {dims[l + 1], dims[l]}, fill));
        b.push_back(store.create("head." + name + ".l" + std::to_string(l) + ".bias",
                                 {dims[l + 1]}, init::zeros()));
      }
    };
    box_ffn("human_box", hw_, hb_);
    box_ffn("object_box", ow_, ob_);
    const Scalar focal_prior = Scalar(-std::log(99.0));  // sigmoid ~= 0.01
    obj_w_ = store.create("head.object_cls.weight", {ko + 1, cd}, init::trunc_normal(rng));
    obj_b_ = store.create("head.object_cls.bias", {ko + 1}, init::constant(focal_prior));
    act_w_ = store.create("head.action_cls.weight", {ka, cd}, init::trunc_normal(rng));
    act_b_ = store.create("head.action_cls.bias", {ka}, init::constant(focal_prior));
  }

  // Shared across decoder layers: the same parameters read every layer's E.
  RawPrediction forward(const Tensor& e) const {
    RawPrediction out;
    out.human_delta = ffn3(e, hw_, hb_);
    out.object_delta = ffn3(e, ow_, ob_);
    out.object_logits = linear(e, obj_w_, obj_b_);
    out.action_logits = linear(e, act_w_, act_b_);
    return out;
  }

 private:
  static Tensor ffn3(const Tensor& x, const std::vector<Tensor>& w,
                     const std::vector<Tensor>& b) {
    Tensor h = relu(linear(x, w[0], b[0]));
    h = relu(linear(h, w[1], b[1]));
    return linear(h, w[2], b[2]);
  }

  std::vector<Tensor> hw_, hb_, ow_, ob_;
  Tensor obj_w_, obj_b_, act_w_, act_b_;
};

}  // namespace hoidet::head
