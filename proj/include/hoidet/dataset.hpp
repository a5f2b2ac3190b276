// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset plumbing: versioned annotation and prediction files, binary PPM
// image I/O, and a deterministic synthetic scene generator whose action
// labels are geometric predicates on the rendered rectangles.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hoidet/annotations.hpp"
#include "hoidet/evaluation.hpp"
#include "hoidet/postprocess.hpp"
#include "hoidet/rng.hpp"
#include "hoidet/tensor.hpp"

namespace hoidet::data {

constexpr const char* kAnnotationFormat = "hoidet-annotations";
constexpr const char* kPredictionFormat = "hoidet-predictions";
constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// annotation files
// ---------------------------------------------------------------------------

struct ImageRecord {
  std::string id;
  int width = 0, height = 0;
  std::string file;  // image path relative to the annotation file, may be empty
  train::GroundTruthSet gts;  // normalized center-size boxes
};

struct Dataset {
  std::vector<std::string> object_names;
  std::vector<std::string> action_names;
  eval::HOIClassTable table;
  std::vector<ImageRecord> images;
};

namespace internal {

inline std::array<double, 4> clamp_corner_box(const std::array<double, 4>& b, double w, double h,
                                              const std::string& image, const char* field) {
  const double x1 = std::max(0.0, std::min(b[0], w));
  const double y1 = std::max(0.0, std::min(b[1], h));
  const double x2 = std::max(0.0, std::min(b[2], w));
  const double y2 = std::max(0.0, std::min(b[3], h));
  if (!(x1 < x2) || !(y1 < y2))
    throw std::runtime_error("annotations: image " + image + ": " + field +
                             " box is empty after clamping to the image");
  return {x1, y1, x2, y2};
}

inline std::array<double, 4> corners_json(const nlohmann::json& j, const std::string& image,
                                          const char* field) {
  if (!j.is_array() || j.size() != 4)
    throw std::runtime_error("annotations: image " + image + ": " + field +
                             " must be [x1,y1,x2,y2]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace internal

inline Dataset parse_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("annotations: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != kAnnotationFormat)
    throw std::runtime_error("annotations: " + path + " is not an annotation file");
  if (j.value("version", 0) != kSchemaVersion)
    throw std::runtime_error("annotations: unsupported schema version in " + path);

  Dataset ds;
  const nlohmann::json& cls = j.at("classes");
  ds.object_names = cls.at("objects").get<std::vector<std::string>>();
  ds.action_names = cls.at("actions").get<std::vector<std::string>>();
  ds.table.rare_threshold = cls.value("rare_threshold", 10);
  for (const nlohmann::json& e : cls.at("hoi")) {
    eval::HOIClassDef def;
    def.object_class = e.at("object").get<int>();
    def.action_class = e.at("action").get<int>();
    def.train_count = e.at("train_count").get<long>();
    if (def.object_class < 0 || def.object_class >= int(ds.object_names.size()) ||
        def.action_class < 0 || def.action_class >= int(ds.action_names.size()))
      throw std::runtime_error("annotations: class table entry outside the vocabularies");
    ds.table.classes.push_back(def);
  }

  for (const nlohmann::json& im : j.at("images")) {
    ImageRecord rec;
    rec.id = im.at("id").get<std::string>();
    rec.width = im.at("width").get<int>();
    rec.height = im.at("height").get<int>();
    rec.file = im.value("file", "");
    if (rec.width <= 0 || rec.height <= 0)
      throw std::runtime_error("annotations: image " + rec.id + ": non-positive size");
    const double w = rec.width, h = rec.height;
    for (const nlohmann::json& hoi : im.value("hois", nlohmann::json::array())) {
      auto hb = internal::corners_json(hoi.at("human"), rec.id, "human");
      auto ob = internal::corners_json(hoi.at("object"), rec.id, "object");
      hb = internal::clamp_corner_box(hb, w, h, rec.id, "human");
      ob = internal::clamp_corner_box(ob, w, h, rec.id, "object");
      train::HOIAnnotation a;
      a.human = to_center_size({hb[0] / w, hb[1] / h, hb[2] / w, hb[3] / h});
      a.object = to_center_size({ob[0] / w, ob[1] / h, ob[2] / w, ob[3] / h});
      a.object_class = hoi.at("object_class").get<int>();
      a.actions = hoi.at("actions").get<std::vector<int>>();
      if (a.object_class < 0 || a.object_class >= int(ds.object_names.size()))
        throw std::runtime_error("annotations: image " + rec.id + ": object_class out of range");
      for (int act : a.actions)
        if (act < 0 || act >= int(ds.action_names.size()))
          throw std::runtime_error("annotations: image " + rec.id + ": action id out of range");
      rec.gts.push_back(a);
    }
    ds.images.push_back(rec);
  }
  return ds;
}

inline void write_annotations(const std::string& path, const Dataset& ds) {
  nlohmann::json j;
  j["format"] = kAnnotationFormat;
  j["version"] = kSchemaVersion;
  j["classes"]["objects"] = ds.object_names;
  j["classes"]["actions"] = ds.action_names;
  j["classes"]["rare_threshold"] = ds.table.rare_threshold;
  nlohmann::json hoi = nlohmann::json::array();
  for (const eval::HOIClassDef& def : ds.table.classes)
    hoi.push_back({{"object", def.object_class},
                   {"action", def.action_class},
                   {"train_count", def.train_count}});
  j["classes"]["hoi"] = hoi;

  nlohmann::json images = nlohmann::json::array();
  for (const ImageRecord& rec : ds.images) {
    nlohmann::json im;
    im["id"] = rec.id;
    im["width"] = rec.width;
    im["height"] = rec.height;
    if (!rec.file.empty()) im["file"] = rec.file;
    nlohmann::json hois = nlohmann::json::array();
    const double w = rec.width, h = rec.height;
    for (const train::HOIAnnotation& a : rec.gts) {
      const Corners hb = to_corners(a.human);
      const Corners ob = to_corners(a.object);
      hois.push_back({{"human", {hb.x1 * w, hb.y1 * h, hb.x2 * w, hb.y2 * h}},
                      {"object", {ob.x1 * w, ob.y1 * h, ob.x2 * w, ob.y2 * h}},
                      {"object_class", a.object_class},
                      {"actions", a.actions}});
    }
    im["hois"] = hois;
    images.push_back(im);
  }
  j["images"] = images;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("annotations: cannot write " + path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// prediction files
// ---------------------------------------------------------------------------

struct ImagePredictions {
  std::string id;
  std::vector<post::HOIInstance> instances;
};

struct PredictionSet {
  std::vector<ImagePredictions> images;
  std::vector<std::array<double, 2>> anchors;  // the model's anchor set
};

inline void write_predictions(const std::string& path, const PredictionSet& ps) {
  nlohmann::json j;
  j["format"] = kPredictionFormat;
  j["version"] = kSchemaVersion;
  nlohmann::json images = nlohmann::json::array();
  for (const ImagePredictions& ip : ps.images) {
    nlohmann::json im;
    im["id"] = ip.id;
    nlohmann::json insts = nlohmann::json::array();
    for (const post::HOIInstance& inst : ip.instances)
      insts.push_back({{"human", {inst.human.cx, inst.human.cy, inst.human.w, inst.human.h}},
                       {"object", {inst.object.cx, inst.object.cy, inst.object.w, inst.object.h}},
                       {"object_class", inst.object_class},
                       {"action_class", inst.action_class},
                       {"object_score", inst.object_score},
                       {"action_score", inst.action_score},
                       {"hoi_score", inst.hoi_score},
                       {"anchor", inst.anchor_index}});
    im["instances"] = insts;
    images.push_back(im);
  }
  j["images"] = images;
  nlohmann::json anchors = nlohmann::json::array();
  for (const std::array<double, 2>& a : ps.anchors) anchors.push_back({a[0], a[1]});
  j["anchors"] = anchors;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("predictions: cannot write " + path);
  out << j.dump(2) << "\n";
}

inline PredictionSet parse_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("predictions: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != kPredictionFormat)
    throw std::runtime_error("predictions: " + path + " is not a prediction file");
  if (j.value("version", 0) != kSchemaVersion)
    throw std::runtime_error("predictions: unsupported schema version in " + path);
  PredictionSet ps;
  for (const nlohmann::json& im : j.at("images")) {
    ImagePredictions ip;
    ip.id = im.at("id").get<std::string>();
    for (const nlohmann::json& e : im.at("instances")) {
      post::HOIInstance inst;
      const auto& hb = e.at("human");
      const auto& ob = e.at("object");
      inst.human = {hb[0].get<double>(), hb[1].get<double>(), hb[2].get<double>(),
                    hb[3].get<double>()};
      inst.object = {ob[0].get<double>(), ob[1].get<double>(), ob[2].get<double>(),
                     ob[3].get<double>()};
      inst.object_class = e.at("object_class").get<int>();
      inst.action_class = e.at("action_class").get<int>();
      inst.object_score = e.at("object_score").get<double>();
      inst.action_score = e.at("action_score").get<double>();
      inst.hoi_score = e.at("hoi_score").get<double>();
      inst.anchor_index = e.at("anchor").get<int>();
      ip.instances.push_back(inst);
    }
    ps.images.push_back(ip);
  }
  for (const nlohmann::json& a : j.value("anchors", nlohmann::json::array()))
    ps.anchors.push_back({a[0].get<double>(), a[1].get<double>()});
  return ps;
}

// Joins ground truths and predictions by image id for the evaluator. Every
// prediction image must exist in the dataset; dataset images with no
// prediction entry contribute an empty list.
inline std::vector<eval::EvalImage> join_for_eval(const Dataset& ds, const PredictionSet& ps) {
  std::vector<eval::EvalImage> out;
  for (const ImageRecord& rec : ds.images) {
    eval::EvalImage ei;
    ei.id = rec.id;
    ei.gts = rec.gts;
    out.push_back(ei);
  }
  for (const ImagePredictions& ip : ps.images) {
    bool found = false;
    for (eval::EvalImage& ei : out)
      if (ei.id == ip.id) {
        ei.preds = ip.instances;
        found = true;
        break;
      }
    if (!found) throw std::runtime_error("predictions reference unknown image " + ip.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PPM image I/O
// ---------------------------------------------------------------------------

// Binary PPM (P6, maxval 255). Tensors are [3,H,W] with values in [0,1].
inline void write_ppm(const std::string& path, const Tensor& image) {
  detail::require(image.ndim() == 3 && image.dim(0) == 3, "write_ppm: image must be [3,H,W]");
  const int h = image.dim(1), w = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ppm: cannot write " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = image.value_at((std::size_t(c) * h + y) * w + x);
        const int byte = int(std::lround(std::min(1.0, std::max(0.0, v)) * 255.0));
        out.put(char(byte));
      }
}

inline Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ppm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("ppm: " + path + " is not a maxval-255 P6 file");
  in.get();  // single whitespace after the header
  std::vector<char> raw(std::size_t(w) * h * 3);
  in.read(raw.data(), std::streamsize(raw.size()));
  if (in.gcount() != std::streamsize(raw.size()))
    throw std::runtime_error("ppm: " + path + " is truncated");
  std::vector<Scalar> vals(std::size_t(3) * h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        vals[(std::size_t(c) * h + y) * w + x] =
            double(std::uint8_t(raw[(std::size_t(y) * w + x) * 3 + c])) / 255.0;
  return Tensor({3, h, w}, vals);
}

// ---------------------------------------------------------------------------
// synthetic scenes
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::uint64_t seed = 1;
  int width = 64, height = 64;
  int num_images = 20;
  int object_classes = 2;  // capped at the color palette below
  int action_classes = 3;  // overlapping / near / far
  int instances_per_image = 1;
};

struct SyntheticDataset {
  Dataset meta;
  std::vector<Tensor> images;  // [3,H,W], aligned with meta.images
};

namespace internal {

struct PixelBox {
  int x1, y1, x2, y2;  // half-open pixel extents
};

inline void fill_rect(std::vector<Scalar>& img, int h, int w, const PixelBox& b, double r,
                      double g, double bl) {
  for (int y = b.y1; y < b.y2; ++y)
    for (int x = b.x1; x < b.x2; ++x) {
      img[(std::size_t(0) * h + y) * w + x] = r;
      img[(std::size_t(1) * h + y) * w + x] = g;
      img[(std::size_t(2) * h + y) * w + x] = bl;
    }
}

inline PixelBox random_box(Rng& rng, int w, int h, int min_side, int max_side) {
  const int bw = int(rng.uniform_int(min_side, max_side));
  const int bh = int(rng.uniform_int(min_side, max_side));
  const int x1 = int(rng.uniform_int(1, w - bw - 1));
  const int y1 = int(rng.uniform_int(1, h - bh - 1));
  return {x1, y1, x1 + bw, y1 + bh};
}

inline bool boxes_overlap(const PixelBox& a, const PixelBox& b) {
  return std::min(a.x2, b.x2) > std::max(a.x1, b.x1) &&
         std::min(a.y2, b.y2) > std::max(a.y1, b.y1);
}

inline double center_distance(const PixelBox& a, const PixelBox& b, int w, int h) {
  const double dx = ((a.x1 + a.x2) - (b.x1 + b.x2)) / 2.0 / double(w);
  const double dy = ((a.y1 + a.y2) - (b.y1 + b.y2)) / 2.0 / double(h);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace internal

// Action label from box geometry: 0 when the boxes overlap, 1 when disjoint
// but with nearby centers, 2 otherwise. The near/far split is at normalized
// center distance 0.35.
inline int synthetic_action(const internal::PixelBox& human, const internal::PixelBox& object,
                            int w, int h, int action_classes) {
  int a;
  if (internal::boxes_overlap(human, object))
    a = 0;
  else if (internal::center_distance(human, object, w, h) < 0.35)
    a = 1;
  else
    a = 2;
  return std::min(a, action_classes - 1);
}

// Renders colored rectangles on a dark background. Human proxies draw in the
// red family and are placed first; objects draw in per-class colors (blue,
// green, then evenly spaced hues) and may overdraw on overlap. The same seed
// always yields bitwise-identical images and annotations.
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.object_classes < 1 || spec.action_classes < 1)
    throw std::invalid_argument("generate_synthetic: vocabulary sizes must be >= 1");
  if (spec.width < 48 || spec.height < 48)
    throw std::invalid_argument("generate_synthetic: image too small for the placement rules");

  Rng rng(spec.seed);
  SyntheticDataset out;
  Dataset& ds = out.meta;
  for (int c = 0; c < spec.object_classes; ++c)
    ds.object_names.push_back("object_" + std::to_string(c));
  ds.action_names = {"overlapping", "near", "far"};
  ds.action_names.resize(std::size_t(spec.action_classes), "");
  for (int a = 3; a < spec.action_classes; ++a)
    ds.action_names[std::size_t(a)] = "action_" + std::to_string(a);

  const int w = spec.width, h = spec.height;
  std::vector<long> pair_counts(std::size_t(spec.object_classes) * spec.action_classes, 0);

  for (int i = 0; i < spec.num_images; ++i) {
    std::vector<Scalar> pixels(std::size_t(3) * h * w, 0.1);
    ImageRecord rec;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "img_%04d", i);
    rec.id = idbuf;
    rec.width = w;
    rec.height = h;
    rec.file = rec.id + ".ppm";

    for (int inst = 0; inst < spec.instances_per_image; ++inst) {
      const internal::PixelBox human = internal::random_box(rng, w, h, 12, 24);
      const int object_class = int(rng.uniform_int(0, spec.object_classes - 1));
      const int placement = int(rng.uniform_int(0, 2));  // overlap / near / far
      internal::PixelBox object{};
      for (int attempt = 0;; ++attempt) {
        if (attempt > 10000)
          throw std::runtime_error("generate_synthetic: placement rejection did not converge");
        object = internal::random_box(rng, w, h, 11, 20);
        const bool overlap = internal::boxes_overlap(human, object);
        const double dist = internal::center_distance(human, object, w, h);
        if (placement == 0 && overlap) break;
        if (placement == 1 && !overlap && dist < 0.33 && dist > 0.02) break;
        if (placement == 2 && !overlap && dist > 0.38) break;
      }

      // human first so overlapping objects read as "object in front"
      const double red = rng.uniform(0.75, 0.95);
      internal::fill_rect(pixels, h, w, human, red, 0.12, 0.10);
      double oc[3] = {0.10, 0.20, 0.85};
      if (object_class == 1) {
        oc[0] = 0.10;
        oc[1] = 0.80;
        oc[2] = 0.15;
      } else if (object_class > 1) {
        oc[0] = 0.2 + 0.6 * double(object_class % 3) / 3.0;
        oc[1] = 0.5;
        oc[2] = 0.6;
      }
      const double fade = rng.uniform(0.9, 1.0);
      internal::fill_rect(pixels, h, w, object, oc[0] * fade, oc[1] * fade, oc[2] * fade);

      const int action = synthetic_action(human, object, w, h, spec.action_classes);
      train::HOIAnnotation a;
      a.human = to_center_size({double(human.x1) / w, double(human.y1) / h, double(human.x2) / w,
                                double(human.y2) / h});
      a.object = to_center_size({double(object.x1) / w, double(object.y1) / h,
                                 double(object.x2) / w, double(object.y2) / h});
      a.object_class = object_class;
      a.actions = {action};
      rec.gts.push_back(a);
      ++pair_counts[std::size_t(object_class) * spec.action_classes + action];
    }
    ds.images.push_back(rec);
    out.images.push_back(Tensor({3, h, w}, pixels));
  }

  // the generated set doubles as the training set, so the class table's
  // training counts are simply the generated counts
  for (int o = 0; o < spec.object_classes; ++o)
    for (int a = 0; a < spec.action_classes; ++a) {
      eval::HOIClassDef def;
      def.object_class = o;
      def.action_class = a;
      def.train_count = pair_counts[std::size_t(o) * spec.action_classes + a];
      ds.table.classes.push_back(def);
    }
  return out;
}

inline void save_synthetic(const std::string& dir, const SyntheticDataset& synth) {
  for (std::size_t i = 0; i < synth.images.size(); ++i)
    write_ppm(dir + "/" + synth.meta.images[i].file, synth.images[i]);
  write_annotations(dir + "/annotations.json", synth.meta);
}

// Loads the images referenced by a parsed dataset, resolving paths against
// the directory the annotation file lives in.
inline std::vector<Tensor> load_images(const Dataset& ds, const std::string& dir) {
  std::vector<Tensor> out;
  for (const ImageRecord& rec : ds.images) {
    if (rec.file.empty())
      throw std::runtime_error("dataset: image " + rec.id + " has no pixel file");
    out.push_back(read_ppm(dir + "/" + rec.file));
  }
  return out;
}

}  // namespace hoidet::data
