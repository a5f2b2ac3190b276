// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small hierarchical feature extractor. A patchify stem and three strided
// stages produce the /8, /16, /32 pyramid (stage-1 /4 output is computed and
// discarded), optionally extended with a stride-64 level. Each level is
// projected to the shared model width, flattened, and position-encoded.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hoidet/config.hpp"
#include "hoidet/ops.hpp"
#include "hoidet/params.hpp"
#include "hoidet/tensor.hpp"

namespace hoidet::backbone {

struct PyramidLevel {
  int channels = 0;
  int h = 0;
  int w = 0;
  Tensor map;  // [channels, h, w]
};

struct FeaturePyramid {
  std::vector<PyramidLevel> levels;
  int image_h = 0, image_w = 0;    // before padding
  int padded_h = 0, padded_w = 0;
};

struct FlattenedSequence {
  Tensor tokens;                  // [N_S, C_d]
  std::vector<LevelSpec> levels;  // shape table into the token rows
  std::vector<Scalar> pos_x, pos_y;  // normalized token centers in [0,1]
  std::vector<int> level_of;         // level id per token
  std::vector<Scalar> valid;         // 1 = real content, 0 = padding
  int image_h = 0, image_w = 0, padded_h = 0, padded_w = 0;
};

class Backbone {
 public:
  Backbone(const Config& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    const int cs = cfg.backbone.base_dim;
    const int cd = cfg.backbone.model_dim;
    auto conv = [&](const std::string& name, int co, int ci, int k) {
      w_.push_back(store.create("backbone." + name + ".weight", {co, ci, k, k},
                                init::conv_fan_in(rng, ci * k * k)));
      b_.push_back(store.create("backbone." + name + ".bias", {co}, init::zeros()));
      ln_g_.push_back(store.create("backbone." + name + ".norm.gamma", {co}, init::constant(1)));
      ln_b_.push_back(store.create("backbone." + name + ".norm.beta", {co}, init::zeros()));
    };
    conv("stem", cs, 3, 4);
    conv("stage1", 2 * cs, cs, 3);
    conv("stage2", 4 * cs, 2 * cs, 3);
    conv("stage3", 8 * cs, 4 * cs, 3);
    if (cfg.backbone.use_extra_level) conv("extra", cd, 8 * cs, 3);

    const int nl = num_levels();
    std::vector<int> chans = {2 * cs, 4 * cs, 8 * cs};
    if (cfg.backbone.use_extra_level) chans.push_back(cd);
    for (int l = 0; l < nl; ++l) {
      proj_w_.push_back(store.create("backbone.proj" + std::to_string(l) + ".weight",
                                     {cd, chans[l]}, init::trunc_normal(rng)));
      proj_b_.push_back(store.create("backbone.proj" + std::to_string(l) + ".bias", {cd},
                                     init::zeros()));
    }
    level_embed_ = store.create("backbone.level_embed", {nl, cd}, init::trunc_normal(rng));
  }

  int num_levels() const { return cfg_.backbone.use_extra_level ? 4 : 3; }
  int alignment() const { return cfg_.backbone.use_extra_level ? 64 : 32; }

  FeaturePyramid extract(const Tensor& image) const {
    detail::require(image.ndim() == 3 && image.dim(0) == 3,
                    "extract_pyramid: image must be [3,H,W]");
    const int h = image.dim(1), w = image.dim(2);
    const int a = alignment();
    const int ph = (h + a - 1) / a * a;
    const int pw = (w + a - 1) / a * a;
    Tensor x = pad_chw(image, ph, pw);

    FeaturePyramid pyr;
    pyr.image_h = h;
    pyr.image_w = w;
    pyr.padded_h = ph;
    pyr.padded_w = pw;

    x = block(x, 0, 4, 0);  // stem: /4, discarded as a level
    x = block(x, 1, 2, 1);  // /8
    pyr.levels.push_back({x.dim(0), x.dim(1), x.dim(2), x});
    x = block(x, 2, 2, 1);  // /16
    pyr.levels.push_back({x.dim(0), x.dim(1), x.dim(2), x});
    x = block(x, 3, 2, 1);  // /32
    pyr.levels.push_back({x.dim(0), x.dim(1), x.dim(2), x});
    if (cfg_.backbone.use_extra_level) {
      x = block(x, 4, 2, 1);  // /64
      pyr.levels.push_back({x.dim(0), x.dim(1), x.dim(2), x});
    }
    return pyr;
  }

  FlattenedSequence project_and_flatten(const FeaturePyramid& pyr) const {
    FlattenedSequence seq;
    seq.image_h = pyr.image_h;
    seq.image_w = pyr.image_w;
    seq.padded_h = pyr.padded_h;
    seq.padded_w = pyr.padded_w;
    std::vector<Tensor> parts;
    int offset = 0;
    for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
      const PyramidLevel& lev = pyr.levels[l];
      Tensor rows = transpose(reshape(lev.map, {lev.channels, lev.h * lev.w}));
      parts.push_back(linear(rows, proj_w_[l], proj_b_[l]));
      seq.levels.push_back({lev.h, lev.w, offset});
      offset += lev.h * lev.w;
      const int stride_y = pyr.padded_h / lev.h;
      const int stride_x = pyr.padded_w / lev.w;
      for (int y = 0; y < lev.h; ++y)
        for (int x = 0; x < lev.w; ++x) {
          seq.pos_x.push_back((Scalar(x) + Scalar(0.5)) / Scalar(lev.w));
          seq.pos_y.push_back((Scalar(y) + Scalar(0.5)) / Scalar(lev.h));
          seq.level_of.push_back(static_cast<int>(l));
          const bool real = x * stride_x < pyr.image_w && y * stride_y < pyr.image_h;
          seq.valid.push_back(real ? Scalar(1) : Scalar(0));
        }
    }
    seq.tokens = concat_rows(parts);
    return seq;
  }

  // Fixed 2-D sinusoid over the normalized token centers plus the learned
  // per-level embedding. Shape [N_S, C_d].
  Tensor positional_encoding(const FlattenedSequence& seq) const {
    const int cd = cfg_.backbone.model_dim;
    const int ns = static_cast<int>(seq.pos_x.size());
    const int half = cd / 2;
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::vector<Scalar> enc(std::size_t(ns) * cd);
    for (int t = 0; t < ns; ++t) {
      for (int j = 0; j < half; ++j) {
        const double dim_t = std::pow(10000.0, 2.0 * (j / 2) / double(half));
        const double ay = two_pi * double(seq.pos_y[std::size_t(t)]) / dim_t;
        const double ax = two_pi * double(seq.pos_x[std::size_t(t)]) / dim_t;
        enc[std::size_t(t) * cd + j] = Scalar(j % 2 == 0 ? std::sin(ay) : std::cos(ay));
        enc[std::size_t(t) * cd + half + j] = Scalar(j % 2 == 0 ? std::sin(ax) : std::cos(ax));
      }
    }
    Tensor sinusoid({ns, cd}, std::move(enc));
    return add(sinusoid, gather_rows(level_embed_, seq.level_of));
  }

 private:
  // conv -> channel layer-norm -> relu
  Tensor block(const Tensor& x, int idx, int stride, int pad) const {
    Tensor y = conv2d(x, w_[std::size_t(idx)], b_[std::size_t(idx)], stride, pad);
    const int c = y.dim(0), h = y.dim(1), w = y.dim(2);
    Tensor rows = transpose(reshape(y, {c, h * w}));
    rows = relu(layer_norm(rows, ln_g_[std::size_t(idx)], ln_b_[std::size_t(idx)]));
    return reshape(transpose(rows), {c, h, w});
  }

  Config cfg_;
  std::vector<Tensor> w_, b_, ln_g_, ln_b_;
  std::vector<Tensor> proj_w_, proj_b_;
  Tensor level_embed_;
};

}  // namespace hoidet::backbone
