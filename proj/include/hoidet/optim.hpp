// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Decoupled-weight-decay adaptive-moment optimizer with two learning-rate
// groups (backbone vs everything else) and global gradient-norm clipping.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hoidet/config.hpp"
#include "hoidet/params.hpp"

namespace hoidet::train {

class AdamW {
 public:
  AdamW(const ParamStore& store, const TrainProtoConfig& cfg) : store_(&store), cfg_(cfg) {
    for (const auto& name : store.names()) {
      Slot s;
      s.name = name;
      s.backbone = name.rfind("backbone.", 0) == 0;
      s.m.assign(store.get(name).size(), 0.0);
      s.v.assign(store.get(name).size(), 0.0);
      slots_.push_back(std::move(s));
    }
  }

  void set_lr_scale(double s) { lr_scale_ = s; }

  // Scales all gradients so their global L2 norm is at most max_norm.
  // Returns the pre-clip norm.
  double clip_gradients(double max_norm) const {
    double sq = 0.0;
    for (const auto& s : slots_) {
      const auto& g = store_->get(s.name).node().grad;
      for (double x : g) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
      const double f = max_norm / norm;
      for (const auto& s : slots_) {
        auto& g = store_->get(s.name).node().grad;
        for (auto& x : g) x *= f;
      }
    }
    return norm;
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (auto& s : slots_) {
      Tensor p = store_->get(s.name);
      auto& grad = p.node().grad;
      if (grad.empty()) grad.assign(p.size(), Scalar(0));
      auto& val = p.mutable_values();
      const double lr = lr_scale_ * (s.backbone ? cfg_.backbone_lr : cfg_.lr);
      for (std::size_t i = 0; i < val.size(); ++i) {
        const double g = double(grad[i]);
        s.m[i] = kBeta1 * s.m[i] + (1.0 - kBeta1) * g;
        s.v[i] = kBeta2 * s.v[i] + (1.0 - kBeta2) * g * g;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        val[i] -= Scalar(lr * (mhat / (std::sqrt(vhat) + kEps) +
                               cfg_.weight_decay * double(val[i])));
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  struct Slot {
    std::string name;
    bool backbone = false;
    std::vector<double> m, v;
  };

  const ParamStore* store_;
  TrainProtoConfig cfg_;
  std::vector<Slot> slots_;
  double lr_scale_ = 1.0;
  long t_ = 0;
};

}  // namespace hoidet::train
