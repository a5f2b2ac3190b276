// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: dataset generation, training, inference, evaluation,
// filter-parameter sweeps, the spatial-scale report, and the built-in
// gradient audit. Every command is a pure function of its inputs, config and
// seed, and exits 0 only on full success.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hoidet/config.hpp"
#include "hoidet/dataset.hpp"
#include "hoidet/evaluation.hpp"
#include "hoidet/loss.hpp"
#include "hoidet/model.hpp"
#include "hoidet/params.hpp"
#include "hoidet/postprocess.hpp"
#include "hoidet/self_check.hpp"
#include "hoidet/train.hpp"

namespace {

using namespace hoidet;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<train::TrainSample> load_training_set(const data::Dataset& ds,
                                                  const std::string& dir) {
  std::vector<Tensor> images = data::load_images(ds, dir);
  std::vector<train::TrainSample> samples;
  for (std::size_t i = 0; i < images.size(); ++i)
    samples.push_back({images[i], ds.images[i].gts});
  return samples;
}

// Runs the model over every image and expands the final layer's outputs.
// The filter chain is applied unless raw instances are requested.
data::PredictionSet run_inference(const Model& model, const Config& cfg,
                                  const data::Dataset& ds, const std::vector<Tensor>& images,
                                  bool raw) {
  NoGradGuard guard;
  post::NMSConfig nms;
  nms.topk = cfg.post.topk;
  nms.delta = cfg.post.delta;
  nms.iou = post::iou_variant_from_string(cfg.post.iou_variant);
  nms.score = post::score_variant_from_string(cfg.post.score_variant);

  data::PredictionSet out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ForwardResult fwd = model.forward(images[i]);
    const LayerPrediction& last = fwd.layers.back();
    auto instances = post::expand_instances(last.human_boxes, last.object_boxes,
                                            last.object_logits, last.action_logits);
    if (!raw) instances = post::filter_instances(instances, nms);
    out.images.push_back({ds.images[i].id, instances});
    if (i == 0)
      for (int q = 0; q < fwd.anchors.dim(0); ++q)
        out.anchors.push_back({fwd.anchors.value_at(std::size_t(q) * 2),
                               fwd.anchors.value_at(std::size_t(q) * 2 + 1)});
  }
  return out;
}

int cmd_synth_gen(const std::string& out_dir, std::uint64_t seed, int images, int objects,
                  int actions, int instances, int size) {
  data::SyntheticSpec spec;
  spec.seed = seed;
  spec.num_images = images;
  spec.object_classes = objects;
  spec.action_classes = actions;
  spec.instances_per_image = instances;
  spec.width = size;
  spec.height = size;
  std::filesystem::create_directories(out_dir);
  data::SyntheticDataset synth = data::generate_synthetic(spec);
  data::save_synthetic(out_dir, synth);
  std::printf("synth-gen: wrote %d images and annotations.json to %s\n", images,
              out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, std::uint64_t seed) {
  Config cfg = load_config(config_path);
  data::Dataset ds = data::parse_annotations(data_dir + "/annotations.json");
  auto samples = load_training_set(ds, data_dir);
  train::Trainer trainer(cfg, seed);
  train::TrainResult result = trainer.run(samples, seed, out_dir);
  std::printf("train: %zu steps, loss %.6f -> %.6f, checkpoint in %s\n", result.log.size(),
              result.first_loss, result.final_loss, out_dir.c_str());
  return 0;
}

int cmd_infer(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& out_path, bool raw) {
  nlohmann::json doc = read_checkpoint_doc(checkpoint_path);
  Config cfg = doc.at("config").get<Config>();
  ParamStore store;
  Rng rng(1);
  Model model(cfg, store, rng);
  store.load_json(doc.at("params"));

  data::Dataset ds = data::parse_annotations(data_dir + "/annotations.json");
  std::vector<Tensor> images = data::load_images(ds, data_dir);
  data::PredictionSet preds = run_inference(model, cfg, ds, images, raw);
  data::write_predictions(out_path, preds);
  long total = 0;
  for (const auto& ip : preds.images) total += long(ip.instances.size());
  std::printf("infer: %zu images, %ld instances -> %s\n", preds.images.size(), total,
              out_path.c_str());
  return 0;
}

int cmd_eval(const std::string& preds_path, const std::string& gts_path,
             const std::string& setting_name, const std::string& report_path) {
  data::Dataset ds = data::parse_annotations(gts_path);
  data::PredictionSet preds = data::parse_predictions(preds_path);
  auto images = data::join_for_eval(ds, preds);
  const eval::EvalSetting setting = eval::setting_from_string(setting_name);
  eval::EvalReport report = eval::evaluate(images, ds.table, setting);

  std::ofstream csv(report_path);
  if (!csv) throw std::runtime_error("eval: cannot write " + report_path);
  csv << "row,object_class,action_class,rare,gt_count,pred_count,ap\n";
  for (const eval::ClassResult& r : report.per_class) {
    const auto& def = ds.table.classes[std::size_t(r.class_id)];
    csv << "class:" << r.class_id << ',' << def.object_class << ',' << def.action_class << ','
        << (ds.table.rare(r.class_id) ? 1 : 0) << ',' << r.gt_count << ',' << r.pred_count << ','
        << r.ap << '\n';
  }
  csv << "mean:full,,,," << report.classes_full << ",," << report.map_full << '\n';
  csv << "mean:rare,,,," << report.classes_rare << ",," << report.map_rare << '\n';
  csv << "mean:nonrare,,,," << report.classes_nonrare << ",," << report.map_nonrare << '\n';
  std::printf("eval[%s]: mAP full %.6f rare %.6f nonrare %.6f (%ld classes) -> %s\n",
              setting_name.c_str(), report.map_full, report.map_rare, report.map_nonrare,
              report.classes_full, report_path.c_str());
  return 0;
}

int cmd_nms_sweep(const std::string& preds_path, const std::string& gts_path,
                  const std::string& scores, const std::string& topks, const std::string& ious,
                  const std::string& deltas, const std::string& report_path) {
  data::Dataset ds = data::parse_annotations(gts_path);
  data::PredictionSet raw = data::parse_predictions(preds_path);
  auto base = data::join_for_eval(ds, raw);

  std::ofstream csv(report_path);
  if (!csv) throw std::runtime_error("nms-sweep: cannot write " + report_path);
  csv << "score_variant,topk,iou_variant,delta,map_full\n";
  for (const std::string& score : split_list(scores))
    for (const std::string& topk : split_list(topks))
      for (const std::string& iou_name : split_list(ious))
        for (const std::string& delta : split_list(deltas)) {
          post::NMSConfig nms;
          nms.score = post::score_variant_from_string(score);
          nms.topk = std::stoi(topk);
          nms.iou = post::iou_variant_from_string(iou_name);
          nms.delta = std::stod(delta);
          auto images = base;
          for (auto& img : images) img.preds = post::filter_instances(img.preds, nms);
          eval::EvalReport report = eval::evaluate(images, ds.table, eval::EvalSetting::kDefault);
          csv << score << ',' << nms.topk << ',' << iou_name << ',' << nms.delta << ','
              << report.map_full << '\n';
        }
  std::printf("nms-sweep: report -> %s\n", report_path.c_str());
  return 0;
}

int cmd_spatial_report(const std::string& preds_path, const std::string& gts_path,
                       const std::string& mode_name, int bins, long floor,
                       const std::string& report_path) {
  data::Dataset ds = data::parse_annotations(gts_path);
  data::PredictionSet preds = data::parse_predictions(preds_path);
  auto images = data::join_for_eval(ds, preds);
  const eval::SpatialMode mode = eval::spatial_mode_from_string(mode_name);
  eval::SpatialReport report = eval::spatial_bins(images, ds.table, mode, bins, floor);

  std::ofstream csv(report_path);
  if (!csv) throw std::runtime_error("spatial-report: cannot write " + report_path);
  eval::write_spatial_csv(csv, report, mode_name);
  std::printf("spatial-report[%s]: %zu bins (floor %ld) -> %s\n", mode_name.c_str(),
              report.bins.size(), floor, report_path.c_str());
  return 0;
}

int cmd_grad_check(std::uint64_t seed, int trials, double tolerance) {
  auto audits = check::run_grad_suite(seed, trials, tolerance);
  bool all_ok = true;
  for (const check::GradAudit& a : audits) {
    std::printf("grad-check %-16s trials %-4d max rel err %.3e  %s\n", a.name.c_str(), a.trials,
                a.max_rel_err, a.ok ? "ok" : "FAIL");
    all_ok = all_ok && a.ok;
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"human-object interaction detector"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir = "out", out_path, checkpoint_path;
  std::string preds_path, gts_path, report_path = "report.csv", setting = "default";
  std::string scores = "co", topks = "100", ious = "comb", deltas = "0.5", mode = "area";
  std::uint64_t seed = 1;
  int images = 20, objects = 2, actions = 3, instances = 1, size = 64;
  int bins = 10, trials = 20;
  long floor = 1000;
  double tolerance = 1e-4;
  bool raw = false;

  CLI::App* synth = app.add_subcommand("synth-gen", "generate a synthetic dataset");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--images", images, "number of images");
  synth->add_option("--objects", objects, "object vocabulary size");
  synth->add_option("--actions", actions, "action vocabulary size");
  synth->add_option("--instances", instances, "interactions per image");
  synth->add_option("--size", size, "square image size in pixels");

  CLI::App* train_cmd = app.add_subcommand("train", "train on an annotated dataset");
  train_cmd->add_option("--config", config_path, "config file")->required();
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--seed", seed, "training seed");

  CLI::App* infer_cmd = app.add_subcommand("infer", "run a checkpoint over a dataset");
  infer_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  infer_cmd->add_option("--data", data_dir, "dataset directory")->required();
  infer_cmd->add_option("--out", out_path, "prediction file to write")->required();
  infer_cmd->add_flag("--raw", raw, "skip top-K selection and NMS");

  CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--preds", preds_path, "prediction file")->required();
  eval_cmd->add_option("--gts", gts_path, "annotation file")->required();
  eval_cmd->add_option("--setting", setting, "default or ko");
  eval_cmd->add_option("--report", report_path, "CSV report path")->required();

  CLI::App* sweep = app.add_subcommand("nms-sweep", "grid-sweep the filter parameters");
  sweep->add_option("--preds", preds_path, "raw (unfiltered) prediction file")->required();
  sweep->add_option("--gts", gts_path, "annotation file")->required();
  sweep->add_option("--scores", scores, "score variants: ca, co, caco");
  sweep->add_option("--topk", topks, "top-K values, e.g. 50,100,150");
  sweep->add_option("--iou", ious, "IoU variants: h, o, comb");
  sweep->add_option("--delta", deltas, "suppression thresholds");
  sweep->add_option("--report", report_path, "CSV report path");

  CLI::App* spatial = app.add_subcommand("spatial-report", "per-bin APs over box scale");
  spatial->add_option("--preds", preds_path, "prediction file")->required();
  spatial->add_option("--gts", gts_path, "annotation file")->required();
  spatial->add_option("--mode", mode, "area or distance");
  spatial->add_option("--bins", bins, "number of bins");
  spatial->add_option("--floor", floor, "minimum ground truths for a bin to be reported");
  spatial->add_option("--report", report_path, "CSV report path");

  CLI::App* grad = app.add_subcommand("grad-check", "finite-difference gradient audit");
  grad->add_option("--seed", seed, "audit seed");
  grad->add_option("--trials", trials, "trials per op");
  grad->add_option("--tolerance", tolerance, "max relative error allowed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth_gen(out_dir, seed, images, objects, actions, instances, size);
    if (train_cmd->parsed()) return cmd_train(config_path, data_dir, out_dir, seed);
    if (infer_cmd->parsed()) return cmd_infer(checkpoint_path, data_dir, out_path, raw);
    if (eval_cmd->parsed()) return cmd_eval(preds_path, gts_path, setting, report_path);
    if (sweep->parsed())
      return cmd_nms_sweep(preds_path, gts_path, scores, topks, ious, deltas, report_path);
    if (spatial->parsed())
      return cmd_spatial_report(preds_path, gts_path, mode, bins, floor, report_path);
    if (grad->parsed()) return cmd_grad_check(seed, trials, tolerance);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
