// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hoidet/dataset.hpp"

using namespace hoidet;

namespace {

// fresh scratch directory per test run
std::string scratch_dir() {
  static int counter = 0;
  std::string dir = (std::filesystem::temp_directory_path() /
                     ("hoidet_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
                        .string();
  std::filesystem::create_directories(dir);
  return dir;
}

data::Dataset tiny_dataset() {
  data::Dataset ds;
  ds.object_names = {"block", "ball"};
  ds.action_names = {"touch", "near", "far"};
  ds.table.classes = {{0, 0, 12}, {0, 1, 3}, {1, 0, 40}};
  data::ImageRecord rec;
  rec.id = "img_0000";
  rec.width = 64;
  rec.height = 64;
  rec.file = "img_0000.ppm";
  train::HOIAnnotation a;
  a.human = to_center_size({4.0 / 64, 8.0 / 64, 20.0 / 64, 24.0 / 64});
  a.object = to_center_size({30.0 / 64, 32.0 / 64, 44.0 / 64, 50.0 / 64});
  a.object_class = 1;
  a.actions = {0, 2};
  rec.gts.push_back(a);
  ds.images.push_back(rec);
  return ds;
}

}  // namespace

TEST_CASE("annotation files round-trip the in-memory dataset") {
  const std::string dir = scratch_dir();
  data::Dataset ds = tiny_dataset();
  data::write_annotations(dir + "/ann.json", ds);
  data::Dataset back = data::parse_annotations(dir + "/ann.json");

  REQUIRE(back.images.size() == 1);
  REQUIRE(back.images[0].gts.size() == 1);
  CHECK(back.object_names == ds.object_names);
  CHECK(back.action_names == ds.action_names);
  REQUIRE(back.table.classes.size() == 3);
  CHECK(back.table.classes[1].train_count == 3);
  CHECK(back.table.rare(1));
  CHECK_FALSE(back.table.rare(0));
  const train::HOIAnnotation& a = ds.images[0].gts[0];
  const train::HOIAnnotation& b = back.images[0].gts[0];
  CHECK(b.human.cx == a.human.cx);
  CHECK(b.human.cy == a.human.cy);
  CHECK(b.human.w == a.human.w);
  CHECK(b.human.h == a.human.h);
  CHECK(b.object.cx == a.object.cx);
  CHECK(b.object.w == a.object.w);
  CHECK(b.object_class == a.object_class);
  CHECK(b.actions == a.actions);
  CHECK(back.images[0].width == 64);
  CHECK(back.images[0].file == "img_0000.ppm");
}

TEST_CASE("malformed annotation files fail with the image named") {
  const std::string dir = scratch_dir();
  data::Dataset ds = tiny_dataset();
  // inverted box: x1 >= x2 once clamped
  ds.images[0].gts[0].human = to_center_size({30.0 / 64, 8.0 / 64, 20.0 / 64, 24.0 / 64});
  data::write_annotations(dir + "/bad.json", ds);
  CHECK_THROWS_WITH(data::parse_annotations(dir + "/bad.json"),
                    Catch::Matchers::ContainsSubstring("img_0000") &&
                        Catch::Matchers::ContainsSubstring("human"));
}

TEST_CASE("annotation parsing rejects unknown schema versions") {
  const std::string dir = scratch_dir();
  {
    std::ofstream out(dir + "/v9.json");
    out << R"({"format": "hoidet-annotations", "version": 9, "classes": {}, "images": []})";
  }
  CHECK_THROWS_WITH(data::parse_annotations(dir + "/v9.json"),
                    Catch::Matchers::ContainsSubstring("version"));
  {
    std::ofstream out(dir + "/other.json");
    out << R"({"format": "something-else", "version": 1})";
  }
  CHECK_THROWS(data::parse_annotations(dir + "/other.json"));
}

TEST_CASE("ppm files round-trip quantized pixel data") {
  const std::string dir = scratch_dir();
  Rng rng(3);
  std::vector<Scalar> vals(3 * 8 * 6);
  // quantize to the 8-bit grid so the round trip is exact
  for (auto& v : vals) v = double(rng.uniform_int(0, 255)) / 255.0;
  Tensor img({3, 8, 6}, vals);
  data::write_ppm(dir + "/img.ppm", img);
  Tensor back = data::read_ppm(dir + "/img.ppm");
  REQUIRE(back.shape() == img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.value_at(i) == img.value_at(i));
}

TEST_CASE("prediction files round-trip instances and anchors") {
  const std::string dir = scratch_dir();
  data::PredictionSet ps;
  data::ImagePredictions ip;
  ip.id = "img_0000";
  post::HOIInstance inst;
  inst.human = {0.5, 0.5, 0.25, 0.125};
  inst.object = {0.25, 0.75, 0.5, 0.125};
  inst.object_class = 1;
  inst.action_class = 2;
  inst.object_score = 0.625;
  inst.action_score = 0.5;
  inst.hoi_score = 0.3125;
  inst.anchor_index = 7;
  ip.instances.push_back(inst);
  ps.images.push_back(ip);
  ps.anchors = {{0.25, 0.75}, {0.5, 0.5}};

  data::write_predictions(dir + "/preds.json", ps);
  data::PredictionSet back = data::parse_predictions(dir + "/preds.json");
  REQUIRE(back.images.size() == 1);
  REQUIRE(back.images[0].instances.size() == 1);
  const post::HOIInstance& r = back.images[0].instances[0];
  CHECK(r.human.cx == inst.human.cx);
  CHECK(r.object.h == inst.object.h);
  CHECK(r.object_class == 1);
  CHECK(r.action_class == 2);
  CHECK(r.hoi_score == inst.hoi_score);
  CHECK(r.anchor_index == 7);
  REQUIRE(back.anchors.size() == 2);
  CHECK(back.anchors[1][0] == 0.5);
}

TEST_CASE("join_for_eval pairs predictions with their images") {
  data::Dataset ds = tiny_dataset();
  data::PredictionSet ps;
  data::ImagePredictions ip;
  ip.id = "img_0000";
  ip.instances.push_back(post::HOIInstance{});
  ps.images.push_back(ip);
  auto joined = data::join_for_eval(ds, ps);
  REQUIRE(joined.size() == 1);
  CHECK(joined[0].preds.size() == 1);
  CHECK(joined[0].gts.size() == 1);

  ps.images[0].id = "img_9999";
  CHECK_THROWS(data::join_for_eval(ds, ps));
}

TEST_CASE("synthetic generation is deterministic per seed") {
  data::SyntheticSpec spec;
  spec.seed = 7;
  spec.num_images = 6;
  auto a = data::generate_synthetic(spec);
  auto b = data::generate_synthetic(spec);
  REQUIRE(a.images.size() == b.images.size());
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    REQUIRE(a.images[i].size() == b.images[i].size());
    for (std::size_t p = 0; p < a.images[i].size(); ++p)
      REQUIRE(a.images[i].value_at(p) == b.images[i].value_at(p));
  }
  for (std::size_t i = 0; i < a.meta.images.size(); ++i) {
    const auto& ga = a.meta.images[i].gts;
    const auto& gb = b.meta.images[i].gts;
    REQUIRE(ga.size() == gb.size());
    for (std::size_t g = 0; g < ga.size(); ++g) {
      CHECK(ga[g].human.cx == gb[g].human.cx);
      CHECK(ga[g].object.cy == gb[g].object.cy);
      CHECK(ga[g].object_class == gb[g].object_class);
      CHECK(ga[g].actions == gb[g].actions);
    }
  }

  spec.seed = 8;
  auto c = data::generate_synthetic(spec);
  bool any_difference = false;
  for (std::size_t p = 0; p < a.images[0].size(); ++p)
    if (a.images[0].value_at(p) != c.images[0].value_at(p)) any_difference = true;
  CHECK(any_difference);
}

TEST_CASE("synthetic scenes carry one annotation per instance slot") {
  data::SyntheticSpec spec;
  spec.seed = 21;
  spec.num_images = 20;
  spec.instances_per_image = 1;
  auto synth = data::generate_synthetic(spec);
  REQUIRE(synth.meta.images.size() == 20);
  long total = 0, counted = 0;
  for (const auto& rec : synth.meta.images) total += long(rec.gts.size());
  CHECK(total == 20);
  // table counts match the generated annotations
  for (const auto& def : synth.meta.table.classes) counted += def.train_count;
  CHECK(counted == 20);
}

TEST_CASE("synthetic distances spread over at least three bins") {
  data::SyntheticSpec spec;
  spec.seed = 9;
  spec.num_images = 30;
  auto synth = data::generate_synthetic(spec);
  double dmax = 0;
  std::vector<double> dists;
  for (const auto& rec : synth.meta.images)
    for (const auto& a : rec.gts) {
      dists.push_back(eval::spatial_metric(a, eval::SpatialMode::kCenterDistance));
      dmax = std::max(dmax, dists.back());
    }
  REQUIRE(dmax > 0);
  std::set<int> bins;
  for (double d : dists) bins.insert(std::min(9, int(d / dmax * 10)));
  CHECK(bins.size() >= 3);
}

TEST_CASE("synthetic actions are the advertised geometric predicates") {
  data::SyntheticSpec spec;
  spec.seed = 33;
  spec.num_images = 40;
  auto synth = data::generate_synthetic(spec);
  std::set<int> seen;
  for (const auto& rec : synth.meta.images)
    for (const auto& a : rec.gts) {
      REQUIRE(a.actions.size() == 1);
      const int action = a.actions[0];
      seen.insert(action);
      const double overlap = iou(a.human, a.object);
      const double dx = a.human.cx - a.object.cx;
      const double dy = a.human.cy - a.object.cy;
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (action == 0) CHECK(overlap > 0.0);
      if (action == 1) {
        CHECK(overlap == 0.0);
        CHECK(dist < 0.35);
      }
      if (action == 2) {
        CHECK(overlap == 0.0);
        CHECK(dist >= 0.35);
      }
    }
  CHECK(seen.size() == 3);  // the generator exercises every action
}

TEST_CASE("saved synthetic datasets parse and load back") {
  const std::string dir = scratch_dir();
  data::SyntheticSpec spec;
  spec.seed = 5;
  spec.num_images = 3;
  auto synth = data::generate_synthetic(spec);
  data::save_synthetic(dir, synth);
  data::Dataset back = data::parse_annotations(dir + "/annotations.json");
  REQUIRE(back.images.size() == 3);
  auto images = data::load_images(back, dir);
  REQUIRE(images.size() == 3);
  // pixels survive up to 8-bit quantization
  for (std::size_t p = 0; p < images[0].size(); ++p)
    CHECK_THAT(images[0].value_at(p),
               Catch::Matchers::WithinAbs(synth.images[0].value_at(p), 0.5 / 255.0));
  // boxes round-trip exactly on the /64 pixel grid
  for (std::size_t i = 0; i < back.images.size(); ++i) {
    REQUIRE(back.images[i].gts.size() == synth.meta.images[i].gts.size());
    for (std::size_t g = 0; g < back.images[i].gts.size(); ++g) {
      CHECK(back.images[i].gts[g].human.cx == synth.meta.images[i].gts[g].human.cx);
      CHECK(back.images[i].gts[g].object.w == synth.meta.images[i].gts[g].object.w);
    }
  }
}
