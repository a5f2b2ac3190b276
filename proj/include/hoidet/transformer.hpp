// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-scale deformable attention encoder and the query-anchor decoder.
// The encoder refines the flattened pyramid into semantic memory; each
// decoder layer runs query self-attention, anchor-guided deformable
// cross-attention, and a feed-forward block, all post-normalized residuals.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hoidet/backbone.hpp"
#include "hoidet/config.hpp"
#include "hoidet/ops.hpp"
#include "hoidet/params.hpp"

namespace hoidet::transformer {

struct Sizes {
  int heads = 0;
  int points = 0;
  int layers = 0;
  int queries = 0;
  int model_dim = 0;
  int ffn_dim = 0;
  int levels = 0;

  static Sizes from(const Config& cfg) {
    Sizes s;
    s.heads = cfg.transformer.heads;
    s.points = cfg.transformer.points;
    s.layers = cfg.transformer.layers;
    s.queries = cfg.transformer.queries;
    s.model_dim = cfg.backbone.model_dim;
    s.ffn_dim = cfg.transformer.ffn_dim;
    s.levels = cfg.backbone.use_extra_level ? 4 : 3;
    if (s.model_dim % s.heads != 0)
      throw std::invalid_argument("model_dim must be divisible by the head count");
    return s;
  }
};

// One multi-scale deformable attention block. Sampling offsets and mixing
// logits are linear in the query; each head's weights are softmaxed over its
// levels*points samples; offsets are normalized by the sampled level's
// extent. Padded memory rows are zeroed out of the value stream.
class MsDeformAttn {
 public:
  MsDeformAttn(const std::string& prefix, const Sizes& sz, ParamStore& store, Rng& rng)
      : sz_(sz) {
    const int cd = sz.model_dim;
    const int mlk = sz.heads * sz.levels * sz.points;
    // Ring bias: every (head, point) pair starts in a distinct direction,
    // point k at radius k+1 (in level-pixel units before normalization).
    std::vector<Scalar> ring(std::size_t(mlk) * 2);
    for (int m = 0; m < sz.heads; ++m)
      for (int l = 0; l < sz.levels; ++l)
        for (int k = 0; k < sz.points; ++k) {
          const double theta = 2.0 * 3.14159265358979323846 * (m * sz.points + k) /
                               double(sz.heads * sz.points);
          const std::size_t si = (std::size_t(m) * sz.levels + l) * sz.points + k;
          ring[si * 2 + 0] = Scalar(std::cos(theta) * (k + 1));
          ring[si * 2 + 1] = Scalar(std::sin(theta) * (k + 1));
        }
    w_off_ = store.create(prefix + ".offset.weight", {mlk * 2, cd}, init::zeros());
    b_off_ = store.create(prefix + ".offset.bias", {mlk * 2}, init::values(std::move(ring)));
    w_logit_ = store.create(prefix + ".logit.weight", {mlk, cd}, init::zeros());
    b_logit_ = store.create(prefix + ".logit.bias", {mlk}, init::zeros());
    w_val_ = store.create(prefix + ".value.weight", {cd, cd}, init::trunc_normal(rng));
    b_val_ = store.create(prefix + ".value.bias", {cd}, init::zeros());
    w_out_ = store.create(prefix + ".out.weight", {cd, cd}, init::trunc_normal(rng));
    b_out_ = store.create(prefix + ".out.bias", {cd}, init::zeros());
  }

  // query: [Nq, C_d] (with positional content if the caller wants it in the
  // offset/logit projections); refs: [Nq, 2] normalized reference points;
  // memory: [N_S, C_d]; valid: 1/0 per memory row.
  Tensor forward(const Tensor& query, const Tensor& refs, const Tensor& memory,
                 const std::vector<Scalar>& valid,
                 const std::vector<LevelSpec>& levels) const {
    detail::require(static_cast<int>(levels.size()) == sz_.levels,
                    "ms_deform_attn: level count mismatch");
    for (Scalar r : refs.values())
      detail::require(r >= Scalar(0) && r <= Scalar(1),
                      "ms_deform_attn: reference outside [0,1]");
    Tensor value = linear(memory, w_val_, b_val_);
    Tensor mask({memory.dim(0)}, valid);
    value = scale_rows(value, mask);

    Tensor offsets = linear(query, w_off_, b_off_);
    std::vector<Scalar> inv_extent(offsets.size() / std::size_t(query.dim(0)));
    for (int m = 0; m < sz_.heads; ++m)
      for (int l = 0; l < sz_.levels; ++l)
        for (int k = 0; k < sz_.points; ++k) {
          const std::size_t si = (std::size_t(m) * sz_.levels + l) * sz_.points + k;
          inv_extent[si * 2 + 0] = Scalar(1) / Scalar(levels[std::size_t(l)].w);
          inv_extent[si * 2 + 1] = Scalar(1) / Scalar(levels[std::size_t(l)].h);
        }
    const int mlk = sz_.heads * sz_.levels * sz_.points;
    Tensor locs = add(tile_cols(refs, mlk), scale_cols(offsets, inv_extent));

    Tensor logits = linear(query, w_logit_, b_logit_);
    Tensor weights = reshape(
        softmax(reshape(logits, {query.dim(0), sz_.heads, sz_.levels * sz_.points}), 2),
        {query.dim(0), mlk});

    Tensor mixed = deform_sample(value, levels, sz_.heads, locs, weights);
    return linear(mixed, w_out_, b_out_);
  }

 private:
  Sizes sz_;
  Tensor w_off_, b_off_, w_logit_, b_logit_, w_val_, b_val_, w_out_, b_out_;
};

// Standard multi-head attention used for decoder query self-attention.
class MultiHeadAttn {
 public:
  MultiHeadAttn(const std::string& prefix, const Sizes& sz, ParamStore& store, Rng& rng)
      : heads_(sz.heads), model_dim_(sz.model_dim) {
    const int cd = sz.model_dim;
    auto proj = [&](const char* n, Tensor& w, Tensor& b) {
      w = store.create(prefix + "." + n + ".weight", {cd, cd}, init::trunc_normal(rng));
      b = store.create(prefix + "." + n + ".bias", {cd}, init::zeros());
    };
    proj("q", w_q_, b_q_);
    proj("k", w_k_, b_k_);
    proj("v", w_v_, b_v_);
    proj("out", w_o_, b_o_);
  }

  Tensor forward(const Tensor& q_in, const Tensor& k_in, const Tensor& v_in) const {
    const int ch = model_dim_ / heads_;
    Tensor q = linear(q_in, w_q_, b_q_);
    Tensor k = linear(k_in, w_k_, b_k_);
    Tensor v = linear(v_in, w_v_, b_v_);
    std::vector<Tensor> outs;
    for (int h = 0; h < heads_; ++h) {
      Tensor qh = slice_cols(q, h * ch, ch);
      Tensor kh = slice_cols(k, h * ch, ch);
      Tensor vh = slice_cols(v, h * ch, ch);
      Tensor att = softmax(scale(matmul(qh, transpose(kh)), Scalar(1) / std::sqrt(Scalar(ch))), 1);
      outs.push_back(matmul(att, vh));
    }
    return linear(concat_cols(outs), w_o_, b_o_);
  }

 private:
  int heads_, model_dim_;
  Tensor w_q_, b_q_, w_k_, b_k_, w_v_, b_v_, w_o_, b_o_;
};

// linear -> relu -> linear feed-forward block.
class FeedForward {
 public:
  FeedForward(const std::string& prefix, const Sizes& sz, ParamStore& store, Rng& rng) {
    w1_ = store.create(prefix + ".ffn1.weight", {sz.ffn_dim, sz.model_dim},
                       init::trunc_normal(rng));
    b1_ = store.create(prefix + ".ffn1.bias", {sz.ffn_dim}, init::zeros());
    w2_ = store.create(prefix + ".ffn2.weight", {sz.model_dim, sz.ffn_dim},
                       init::trunc_normal(rng));
    b2_ = store.create(prefix + ".ffn2.bias", {sz.model_dim}, init::zeros());
  }

  Tensor forward(const Tensor& x) const { return linear(relu(linear(x, w1_, b1_)), w2_, b2_); }

 private:
  Tensor w1_, b1_, w2_, b2_;
};

class LayerNormBlock {
 public:
  LayerNormBlock(const std::string& prefix, int dim, ParamStore& store) {
    g_ = store.create(prefix + ".gamma", {dim}, init::constant(1));
    b_ = store.create(prefix + ".beta", {dim}, init::zeros());
  }
  Tensor forward(const Tensor& x) const { return layer_norm(x, g_, b_); }

 private:
  Tensor g_, b_;
};

class Encoder {
 public:
  Encoder(const Sizes& sz, ParamStore& store, Rng& rng) : sz_(sz) {
    for (int l = 0; l < sz.layers; ++l) {
      const std::string p = "encoder.layer" + std::to_string(l);
      attn_.emplace_back(p + ".attn", sz, store, rng);
      ln1_.emplace_back(p + ".norm1", sz.model_dim, store);
      ffn_.emplace_back(p, sz, store, rng);
      ln2_.emplace_back(p + ".norm2", sz.model_dim, store);
    }
  }

  // Each token attends with its own center as the reference point.
  Tensor forward(const backbone::FlattenedSequence& seq, const Tensor& pos) const {
    const int ns = seq.tokens.dim(0);
    std::vector<Scalar> refs(std::size_t(ns) * 2);
    for (int t = 0; t < ns; ++t) {
      refs[std::size_t(t) * 2 + 0] = seq.pos_x[std::size_t(t)];
      refs[std::size_t(t) * 2 + 1] = seq.pos_y[std::size_t(t)];
    }
    Tensor ref_t({ns, 2}, std::move(refs));
    Tensor src = seq.tokens;
    for (int l = 0; l < sz_.layers; ++l) {
      Tensor q = add(src, pos);
      Tensor att = attn_[std::size_t(l)].forward(q, ref_t, src, seq.valid, seq.levels);
      src = ln1_[std::size_t(l)].forward(add(src, att));
      src = ln2_[std::size_t(l)].forward(add(src, ffn_[std::size_t(l)].forward(src)));
    }
    return src;
  }

 private:
  Sizes sz_;
  std::vector<MsDeformAttn> attn_;
  std::vector<LayerNormBlock> ln1_;
  std::vector<FeedForward> ffn_;
  std::vector<LayerNormBlock> ln2_;
};

// Learned joint query embedding, split into content and positional halves,
// with the anchor projection. Anchors depend only on parameters, so they are
// fixed at inference time.
class QueryBank {
 public:
  QueryBank(const Sizes& sz, ParamStore& store, Rng& rng) : model_dim_(sz.model_dim) {
    joint_ = store.create("queries.joint", {sz.queries, 2 * sz.model_dim},
                          init::normal(rng, 1.0));
    w_anchor_ = store.create("queries.anchor.weight", {2, sz.model_dim},
                             init::trunc_normal(rng));
    b_anchor_ = store.create("queries.anchor.bias", {2}, init::zeros());
  }

  Tensor content() const { return slice_cols(joint_, 0, model_dim_); }      // Q_HOI
  Tensor positional() const { return slice_cols(joint_, model_dim_, model_dim_); }  // Q_Pos

  // P = sigmoid(linear(Q_Pos)), strictly inside (0,1)^2.
  Tensor generate_anchors() const {
    return sigmoid(linear(positional(), w_anchor_, b_anchor_));
  }

 private:
  int model_dim_;
  Tensor joint_, w_anchor_, b_anchor_;
};

class Decoder {
 public:
  Decoder(const Sizes& sz, ParamStore& store, Rng& rng) : sz_(sz) {
    for (int l = 0; l < sz.layers; ++l) {
      const std::string p = "decoder.layer" + std::to_string(l);
      self_.emplace_back(p + ".self", sz, store, rng);
      ln1_.emplace_back(p + ".norm1", sz.model_dim, store);
      cross_.emplace_back(p + ".cross", sz, store, rng);
      ln2_.emplace_back(p + ".norm2", sz.model_dim, store);
      ffn_.emplace_back(p, sz, store, rng);
      ln3_.emplace_back(p + ".norm3", sz.model_dim, store);
    }
  }

  // Returns every layer's embeddings; the last entry feeds the heads, the
  // rest feed auxiliary losses. Anchors are shared by all layers. Q_Pos
  // enters only the self-attention queries and keys.
  std::vector<Tensor> forward(const Tensor& q_content, const Tensor& q_pos,
                              const Tensor& anchors, const Tensor& memory,
                              const std::vector<Scalar>& valid,
                              const std::vector<LevelSpec>& levels) const {
    std::vector<Tensor> outputs;
    Tensor e = q_content;
    for (int l = 0; l < sz_.layers; ++l) {
      Tensor qk = add(e, q_pos);
      Tensor att = self_[std::size_t(l)].forward(qk, qk, e);
      e = ln1_[std::size_t(l)].forward(add(e, att));
      Tensor cross = cross_[std::size_t(l)].forward(e, anchors, memory, valid, levels);
      e = ln2_[std::size_t(l)].forward(add(e, cross));
      e = ln3_[std::size_t(l)].forward(add(e, ffn_[std::size_t(l)].forward(e)));
      outputs.push_back(e);
    }
    return outputs;
  }

 private:
  Sizes sz_;
  std::vector<MultiHeadAttn> self_;
  std::vector<LayerNormBlock> ln1_;
  std::vector<MsDeformAttn> cross_;
  std::vector<LayerNormBlock> ln2_;
  std::vector<FeedForward> ffn_;
  std::vector<LayerNormBlock> ln3_;
};

}  // namespace hoidet::transformer
