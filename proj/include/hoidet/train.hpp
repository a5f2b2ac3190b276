// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic training loop: shuffled mini-batches, per-layer matching,
// gradient clipping, step-decayed learning rates, CSV loss log, versioned
// checkpoints. Aborts with a diagnostic if the loss ever turns non-finite.

#pragma once

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "hoidet/loss.hpp"
#include "hoidet/model.hpp"
#include "hoidet/optim.hpp"
#include "hoidet/rng.hpp"

namespace hoidet::train {

struct TrainSample {
  Tensor image;  // [3,H,W], untracked constant
  GroundTruthSet gts;
};

struct StepLog {
  int step = 0;
  int epoch = 0;
  double total = 0;
  LayerTerms last_layer;  // terms of the final decoder layer, batch-averaged
};

struct TrainResult {
  std::vector<StepLog> log;
  double first_loss = 0;
  double final_loss = 0;
};

class Trainer {
 public:
  Trainer(const Config& cfg, std::uint64_t seed)
      : cfg_(cfg), init_rng_(seed), model_(cfg, store_, init_rng_), opt_(store_, cfg.train) {}

  Model& model() { return model_; }
  ParamStore& store() { return store_; }

  // out_dir may be empty to skip all file output.
  TrainResult run(const std::vector<TrainSample>& data, std::uint64_t seed,
                  const std::string& out_dir) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    TrainResult result;
    Rng order_rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::ofstream csv;
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      csv.open(out_dir + "/loss_log.csv");
      csv << "step,epoch,total,object_cls,action_cls,l1_human,l1_object,giou_human,"
             "giou_object\n";
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    int step = 0;
    const int batch = std::max(1, cfg_.train.batch);
    for (int epoch = 0; epoch < cfg_.train.epochs; ++epoch) {
      opt_.set_lr_scale(epoch >= cfg_.train.decay_epoch ? cfg_.train.decay_factor : 1.0);
      shuffle(order, order_rng);
      for (std::size_t start = 0; start < order.size(); start += std::size_t(batch)) {
        const std::size_t end = std::min(order.size(), start + std::size_t(batch));
        const double inv = 1.0 / double(end - start);
        store_.zero_grads();
        double batch_total = 0;
        LayerTerms last{};
        for (std::size_t i = start; i < end; ++i) {
          const TrainSample& sample = data[order[i]];
          ForwardResult fwd = model_.forward(sample.image);
          LossBreakdown breakdown;
          Tensor loss = compute_loss_matched(fwd.layers, sample.gts, cfg_.loss, &breakdown);
          if (!std::isfinite(breakdown.total))
            throw std::runtime_error("train: non-finite loss at step " +
                                     std::to_string(step));
          scale(loss, Scalar(inv)).backward();
          batch_total += inv * breakdown.total;
          accumulate(last, breakdown.per_layer.back(), inv);
        }
        opt_.clip_gradients(cfg_.train.clip_norm);
        opt_.step();
        ++step;
        result.log.push_back({step, epoch, batch_total, last});
        if (result.log.size() == 1) result.first_loss = batch_total;
        result.final_loss = batch_total;
        if (csv.is_open())
          csv << step << ',' << epoch << ',' << batch_total << ',' << last.object_cls << ','
              << last.action_cls << ',' << last.l1_human << ',' << last.l1_object << ','
              << last.giou_human << ',' << last.giou_object << '\n';
      }
      if (!out_dir.empty() && cfg_.train.checkpoint_every > 0 &&
          (epoch + 1) % cfg_.train.checkpoint_every == 0)
        save_checkpoint(out_dir + "/checkpoint_epoch" + std::to_string(epoch + 1) + ".json",
                        store_, nlohmann::json(cfg_));
    }
    if (!out_dir.empty())
      save_checkpoint(out_dir + "/checkpoint_final.json", store_, nlohmann::json(cfg_));
    return result;
  }

 private:
  static void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[std::size_t(rng.uniform_int(0, std::int64_t(i) - 1))]);
  }

  static void accumulate(LayerTerms& into, const LayerTerms& t, double w) {
    into.object_cls += w * t.object_cls;
    into.action_cls += w * t.action_cls;
    into.l1_human += w * t.l1_human;
    into.l1_object += w * t.l1_object;
    into.giou_human += w * t.giou_human;
    into.giou_object += w * t.giou_object;
  }

  Config cfg_;
  ParamStore store_;
  Rng init_rng_;
  Model model_;
  AdamW opt_;
};

}  // namespace hoidet::train
