// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Detection-style evaluation of human-object interactions: per-class
// greedy matching at IoU 0.5 on both boxes, all-points average precision,
// mean AP under the default and known-object settings with rarity splits,
// and the spatial binning report over box scale and center distance.

#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoidet/annotations.hpp"
#include "hoidet/geometry.hpp"
#include "hoidet/postprocess.hpp"

namespace hoidet::eval {

// ---------------------------------------------------------------------------
// class table
// ---------------------------------------------------------------------------

struct HOIClassDef {
  int object_class = 0;
  int action_class = 0;
  long train_count = 0;  // training-set instance count, drives the rarity split
};

struct HOIClassTable {
  std::vector<HOIClassDef> classes;
  long rare_threshold = 10;  // classes with fewer training instances are rare

  int find(int object_class, int action_class) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i].object_class == object_class && classes[i].action_class == action_class)
        return int(i);
    return -1;
  }
  bool rare(int id) const { return classes[std::size_t(id)].train_count < rare_threshold; }
};

enum class EvalSetting { kDefault, kKnownObject };

inline EvalSetting setting_from_string(const std::string& s) {
  if (s == "default") return EvalSetting::kDefault;
  if (s == "ko" || s == "known-object") return EvalSetting::kKnownObject;
  throw std::invalid_argument("unknown eval setting: " + s);
}

// One image's ground truths and post-processed predictions.
struct EvalImage {
  std::string id;
  train::GroundTruthSet gts;
  std::vector<post::HOIInstance> preds;
};

// ---------------------------------------------------------------------------
// per-class matching
// ---------------------------------------------------------------------------

struct ClassGT {
  int image = 0;  // index into the image list
  Corners human, object;
};

struct ClassPred {
  int image = 0;
  double score = 0;
  Corners human, object;
  int anchor = 0;
  bool tp = false;
  int matched_gt = -1;  // index into the class's GT list
};

// Greedy matcher over one class's ranked predictions. A prediction is a true
// positive only if both boxes clear IoU 0.5 against some still-unclaimed
// ground truth in the same image; it claims the eligible ground truth with
// the highest min of the two IoUs, earliest on ties.
inline void match_detections(std::vector<ClassPred>& preds, const std::vector<ClassGT>& gts) {
  std::vector<char> claimed(gts.size(), 0);
  for (ClassPred& p : preds) {
    int best = -1;
    double best_min_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g] || gts[g].image != p.image) continue;
      const double hi = iou(p.human, gts[g].human);
      const double oi = iou(p.object, gts[g].object);
      if (hi <= 0.5 || oi <= 0.5) continue;
      const double m = std::min(hi, oi);
      if (m > best_min_iou) {
        best_min_iou = m;
        best = int(g);
      }
    }
    if (best >= 0) {
      claimed[std::size_t(best)] = 1;
      p.tp = true;
      p.matched_gt = best;
    }
  }
}

// Ranks predictions for matching and AP: score descending, then image index
// and anchor ascending so the evaluation is deterministic under ties.
inline void sort_class_preds(std::vector<ClassPred>& preds) {
  std::sort(preds.begin(), preds.end(), [](const ClassPred& a, const ClassPred& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.anchor < b.anchor;
  });
}

// ---------------------------------------------------------------------------
// average precision
// ---------------------------------------------------------------------------

// All-points interpolated AP over ranked true/false-positive flags: the
// precision at each recall level is the maximum precision at that or any
// higher recall. Classes with zero ground truths carry no AP.
inline double average_precision(const std::vector<char>& tp_flags, long gt_count) {
  if (gt_count <= 0) return 0.0;
  const std::size_t n = tp_flags.size();
  std::vector<double> precision(n), recall(n);
  long tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (tp_flags[k]) ++tp;
    precision[k] = double(tp) / double(k + 1);
    recall[k] = double(tp) / double(gt_count);
  }
  // running max from the right gives the precision envelope
  double env = 0.0;
  double ap = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    env = std::max(env, precision[k]);
    const double prev_recall = k == 0 ? 0.0 : recall[k - 1];
    if (recall[k] > prev_recall) ap += env * (recall[k] - prev_recall);
  }
  return ap;
}

// Independent PR integration used as the oracle: sweep every cut position in
// the ranked list, collect the (recall, precision) points, and integrate the
// envelope by explicit rectangle sums over the distinct recall values.
inline double average_precision_sweep(const std::vector<char>& tp_flags, long gt_count) {
  if (gt_count <= 0) return 0.0;
  struct Point {
    double recall, precision;
  };
  std::vector<Point> pts;
  long tp = 0, fp = 0;
  for (std::size_t k = 0; k < tp_flags.size(); ++k) {
    if (tp_flags[k])
      ++tp;
    else
      ++fp;
    pts.push_back({double(tp) / double(gt_count), double(tp) / double(tp + fp)});
  }
  std::vector<double> recalls;
  for (const Point& p : pts) recalls.push_back(p.recall);
  std::sort(recalls.begin(), recalls.end());
  recalls.erase(std::unique(recalls.begin(), recalls.end()), recalls.end());

  double ap = 0.0;
  double prev = 0.0;
  for (double r : recalls) {
    if (r <= 0.0) {
      prev = 0.0;
      continue;
    }
    double best = 0.0;
    for (const Point& p : pts)
      if (p.recall >= r) best = std::max(best, p.precision);
    ap += best * (r - prev);
    prev = r;
  }
  return ap;
}

// ---------------------------------------------------------------------------
// dataset-level evaluation
// ---------------------------------------------------------------------------

struct ClassResult {
  int class_id = 0;
  long gt_count = 0;
  long pred_count = 0;
  double ap = 0.0;
};

struct EvalReport {
  std::vector<ClassResult> per_class;
  double map_full = 0, map_rare = 0, map_nonrare = 0;
  long classes_full = 0, classes_rare = 0, classes_nonrare = 0;
};

namespace internal {

// Collects one class's GT and prediction pools. Under the known-object
// setting both pools are restricted to images whose annotations mention the
// class's object category at all.
inline void class_pools(const std::vector<EvalImage>& images, const HOIClassDef& def,
                        EvalSetting setting, std::vector<ClassGT>* gts,
                        std::vector<ClassPred>* preds) {
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (setting == EvalSetting::kKnownObject) {
      bool has_object = false;
      for (const train::HOIAnnotation& a : images[i].gts)
        if (a.object_class == def.object_class) {
          has_object = true;
          break;
        }
      if (!has_object) continue;
    }
    for (const train::HOIAnnotation& a : images[i].gts) {
      if (a.object_class != def.object_class) continue;
      if (std::find(a.actions.begin(), a.actions.end(), def.action_class) == a.actions.end())
        continue;
      gts->push_back({int(i), to_corners(a.human), to_corners(a.object)});
    }
    for (const post::HOIInstance& p : images[i].preds) {
      if (p.object_class != def.object_class || p.action_class != def.action_class) continue;
      preds->push_back({int(i), p.hoi_score, to_corners(p.human), to_corners(p.object),
                        p.anchor_index, false, -1});
    }
  }
}

}  // namespace internal

// Per-class AP assembled into the Full / Rare / Non-Rare means. Classes with
// zero ground truths are excluded from every mean.
inline EvalReport evaluate(const std::vector<EvalImage>& images, const HOIClassTable& table,
                           EvalSetting setting) {
  for (const EvalImage& img : images)
    for (const train::HOIAnnotation& a : img.gts)
      for (int act : a.actions)
        if (table.find(a.object_class, act) < 0)
          throw std::runtime_error("evaluate: image " + img.id +
                                   " has an annotation outside the class table");

  EvalReport report;
  double sum_full = 0, sum_rare = 0, sum_nonrare = 0;
  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    std::vector<ClassGT> gts;
    std::vector<ClassPred> preds;
    internal::class_pools(images, table.classes[c], setting, &gts, &preds);
    sort_class_preds(preds);
    match_detections(preds, gts);
    std::vector<char> flags;
    for (const ClassPred& p : preds) flags.push_back(p.tp ? 1 : 0);

    ClassResult r;
    r.class_id = int(c);
    r.gt_count = long(gts.size());
    r.pred_count = long(preds.size());
    r.ap = average_precision(flags, r.gt_count);
    report.per_class.push_back(r);
    if (r.gt_count == 0) continue;

    sum_full += r.ap;
    ++report.classes_full;
    if (table.rare(int(c))) {
      sum_rare += r.ap;
      ++report.classes_rare;
    } else {
      sum_nonrare += r.ap;
      ++report.classes_nonrare;
    }
  }
  if (report.classes_full > 0) report.map_full = sum_full / double(report.classes_full);
  if (report.classes_rare > 0) report.map_rare = sum_rare / double(report.classes_rare);
  if (report.classes_nonrare > 0)
    report.map_nonrare = sum_nonrare / double(report.classes_nonrare);
  return report;
}

// ---------------------------------------------------------------------------
// spatial binning
// ---------------------------------------------------------------------------

enum class SpatialMode { kLargerArea, kCenterDistance };

inline SpatialMode spatial_mode_from_string(const std::string& s) {
  if (s == "area") return SpatialMode::kLargerArea;
  if (s == "distance") return SpatialMode::kCenterDistance;
  throw std::invalid_argument("unknown spatial mode: " + s);
}

inline double spatial_metric(const train::HOIAnnotation& a, SpatialMode mode) {
  if (mode == SpatialMode::kLargerArea)
    return std::max(to_corners(a.human).area(), to_corners(a.object).area());
  const double dx = a.human.cx - a.object.cx;
  const double dy = a.human.cy - a.object.cy;
  return std::sqrt(dx * dx + dy * dy);
}

struct SpatialBin {
  double lo = 0, hi = 0;
  long gt_count = 0;       // ground truths landing in this bin, all classes
  long classes = 0;        // classes with at least one ground truth here
  double map = 0;          // mean AP over those classes
  bool reported = false;   // carries more instances than the floor
};

struct SpatialReport {
  SpatialMode mode = SpatialMode::kLargerArea;
  double metric_max = 0;
  std::vector<SpatialBin> bins;
  // per-bin per-class flags, kept so callers can audit each AP independently:
  // entry [bin][class] holds the ranked flags and the bin's GT count for the
  // class (empty flags with zero count when the class is absent).
  std::vector<std::vector<std::pair<std::vector<char>, long>>> audit;
};

// Equal-width bins over [0, observed max] of the chosen metric. Matching is
// the default-setting global match; true positives land in the bin of their
// claimed ground truth, while unmatched predictions count against every bin.
inline SpatialReport spatial_bins(const std::vector<EvalImage>& images,
                                  const HOIClassTable& table, SpatialMode mode,
                                  int bin_count = 10, long min_count = 1000) {
  if (bin_count < 1) throw std::invalid_argument("spatial_bins: need at least one bin");
  SpatialReport report;
  report.mode = mode;

  // observed range over every ground-truth instance (per action entry, since
  // each (annotation, action) pair is one instance of some class)
  double metric_max = 0;
  for (const EvalImage& img : images)
    for (const train::HOIAnnotation& a : img.gts)
      if (!a.actions.empty()) metric_max = std::max(metric_max, spatial_metric(a, mode));
  report.metric_max = metric_max;
  const double width = metric_max > 0 ? metric_max / double(bin_count) : 1.0;
  auto bin_of = [&](double metric) {
    const int b = int(std::floor(metric / width));
    return std::min(bin_count - 1, std::max(0, b));
  };

  report.bins.resize(std::size_t(bin_count));
  report.audit.resize(std::size_t(bin_count));
  for (int b = 0; b < bin_count; ++b) {
    report.bins[std::size_t(b)].lo = width * b;
    report.bins[std::size_t(b)].hi = width * (b + 1);
    report.audit[std::size_t(b)].resize(table.classes.size());
  }

  std::vector<double> sum_ap(std::size_t(bin_count), 0.0);
  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    std::vector<ClassGT> gts;
    std::vector<ClassPred> preds;
    internal::class_pools(images, table.classes[c], EvalSetting::kDefault, &gts, &preds);

    // per-GT bin assignment recomputed from the source annotation
    std::vector<int> gt_bin;
    for (const EvalImage& img : images)
      for (const train::HOIAnnotation& a : img.gts) {
        if (a.object_class != table.classes[c].object_class) continue;
        if (std::find(a.actions.begin(), a.actions.end(), table.classes[c].action_class) ==
            a.actions.end())
          continue;
        gt_bin.push_back(bin_of(spatial_metric(a, mode)));
      }

    sort_class_preds(preds);
    match_detections(preds, gts);

    std::vector<long> npos(std::size_t(bin_count), 0);
    for (int b : gt_bin) ++npos[std::size_t(b)];

    for (int b = 0; b < bin_count; ++b) {
      std::vector<char> flags;
      for (const ClassPred& p : preds) {
        if (p.matched_gt >= 0) {
          if (gt_bin[std::size_t(p.matched_gt)] == b) flags.push_back(1);
          // matches claimed by other bins are out of scope here
        } else {
          flags.push_back(0);
        }
      }
      report.audit[std::size_t(b)][c] = {flags, npos[std::size_t(b)]};
      report.bins[std::size_t(b)].gt_count += npos[std::size_t(b)];
      if (npos[std::size_t(b)] > 0) {
        sum_ap[std::size_t(b)] += average_precision(flags, npos[std::size_t(b)]);
        ++report.bins[std::size_t(b)].classes;
      }
    }
  }
  for (int b = 0; b < bin_count; ++b) {
    SpatialBin& bin = report.bins[std::size_t(b)];
    if (bin.classes > 0) bin.map = sum_ap[std::size_t(b)] / double(bin.classes);
    bin.reported = bin.gt_count > min_count;
  }
  return report;
}

// One CSV row per bin; suppressed bins keep their counts but are flagged.
inline void write_spatial_csv(std::ostream& out, const SpatialReport& report,
                              const std::string& mode_name) {
  out << "mode,bin,lo,hi,gt_count,classes,map,reported\n";
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const SpatialBin& bin = report.bins[b];
    out << mode_name << ',' << b << ',' << bin.lo << ',' << bin.hi << ',' << bin.gt_count << ','
        << bin.classes << ',' << bin.map << ',' << (bin.reported ? 1 : 0) << '\n';
  }
}

}  // namespace hoidet::eval
