// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Full pipeline assembly: backbone pyramid -> encoder memory -> query-anchor
// decoder -> interaction head, with boxes composed onto the shared anchors.

#pragma once

#include <vector>

#include "hoidet/backbone.hpp"
#include "hoidet/config.hpp"
#include "hoidet/geometry.hpp"
#include "hoidet/heads.hpp"
#include "hoidet/params.hpp"
#include "hoidet/transformer.hpp"

namespace hoidet {

struct LayerPrediction {
  Tensor human_boxes;    // [Nq, 4] center-size, normalized
  Tensor object_boxes;   // [Nq, 4]
  Tensor object_logits;  // [Nq, K_o + 1]
  Tensor action_logits;  // [Nq, K_a]
};

struct ForwardResult {
  std::vector<LayerPrediction> layers;  // one per decoder layer, last is final
  Tensor anchors;                       // [Nq, 2]
};

class Model {
 public:
  Model(const Config& cfg, ParamStore& store, Rng& rng)
      : cfg_(cfg),
        sizes_(transformer::Sizes::from(cfg)),
        backbone_(cfg, store, rng),
        encoder_(sizes_, store, rng),
        queries_(sizes_, store, rng),
        decoder_(sizes_, store, rng),
        head_(cfg, store, rng) {}

  ForwardResult forward(const Tensor& image) const {
    auto pyramid = backbone_.extract(image);
    auto seq = backbone_.project_and_flatten(pyramid);
    Tensor pos = backbone_.positional_encoding(seq);
    Tensor memory = encoder_.forward(seq, pos);
    Tensor anchors = queries_.generate_anchors();
    auto layers = decoder_.forward(queries_.content(), queries_.positional(), anchors,
                                   memory, seq.valid, seq.levels);
    const BoxCompose mode = cfg_.head.box_compose == "literal" ? BoxCompose::kLiteralAdd
                                                               : BoxCompose::kInverseSigmoid;
    ForwardResult out;
    out.anchors = anchors;
    for (const Tensor& e : layers) {
      head::RawPrediction raw = head_.forward(e);
      LayerPrediction lp;
      lp.human_boxes = compose_boxes(raw.human_delta, anchors, mode);
      lp.object_boxes = compose_boxes(raw.object_delta, anchors, mode);
      lp.object_logits = raw.object_logits;
      lp.action_logits = raw.action_logits;
      out.layers.push_back(std::move(lp));
    }
    return out;
  }

  const transformer::QueryBank& queries() const { return queries_; }
  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  transformer::Sizes sizes_;
  backbone::Backbone backbone_;
  transformer::Encoder encoder_;
  transformer::QueryBank queries_;
  transformer::Decoder decoder_;
  head::InteractionHead head_;
};

}  // namespace hoidet
