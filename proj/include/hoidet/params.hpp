// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Named parameter registry with deterministic iteration order, the standard
// initializers, and a versioned JSON checkpoint format (name -> shape ->
// values). JSON keeps doubles exact through a round trip, which the
// bitwise-determinism contracts rely on.

#pragma once

#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hoidet/rng.hpp"
#include "hoidet/tensor.hpp"

namespace hoidet {

class ParamStore {
 public:
  // Creates a tracked leaf filled by `fill`, registered under `name`.
  Tensor create(const std::string& name, Shape shape,
                const std::function<void(std::vector<Scalar>&)>& fill) {
    if (map_.count(name)) throw std::logic_error("ParamStore: duplicate parameter " + name);
    std::vector<Scalar> data(shape_numel(shape));
    fill(data);
    Tensor t(std::move(shape), std::move(data), true);
    order_.push_back(name);
    map_.emplace(name, t);
    return t;
  }

  Tensor get(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return map_.count(name) != 0; }
  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& name : order_) n += map_.at(name).size();
    return n;
  }

  void zero_grads() {
    for (const auto& name : order_) map_.at(name).zero_grad();
  }

  nlohmann::json to_json() const {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& name : order_) {
      const Tensor& t = map_.at(name);
      params[name] = {{"shape", t.shape()}, {"data", t.values()}};
    }
    return params;
  }

  // Loads values into already-registered parameters; shapes must agree.
  void load_json(const nlohmann::json& params) {
    for (const auto& name : order_) {
      if (!params.contains(name))
        throw std::runtime_error("checkpoint: missing parameter " + name);
      const auto& entry = params.at(name);
      const Shape shape = entry.at("shape").get<Shape>();
      Tensor t = map_.at(name);
      if (shape != t.shape())
        throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file " +
                                 shape_str(shape) + " vs model " + shape_str(t.shape()));
      auto data = entry.at("data").get<std::vector<Scalar>>();
      if (data.size() != t.size())
        throw std::runtime_error("checkpoint: data length mismatch for " + name);
      t.mutable_values() = std::move(data);
    }
    for (auto it = params.begin(); it != params.end(); ++it)
      if (!map_.count(it.key()))
        throw std::runtime_error("checkpoint: unexpected parameter " + it.key());
  }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> map_;
};

// ---------------------------------------------------------------------------
// initializer fills
// ---------------------------------------------------------------------------

namespace init {

inline auto zeros() {
  return [](std::vector<Scalar>& v) { std::fill(v.begin(), v.end(), Scalar(0)); };
}

inline auto constant(Scalar c) {
  return [c](std::vector<Scalar>& v) { std::fill(v.begin(), v.end(), c); };
}

inline auto values(std::vector<Scalar> vals) {
  return [vals = std::move(vals)](std::vector<Scalar>& v) {
    if (vals.size() != v.size()) throw std::logic_error("init::values: size mismatch");
    v = vals;
  };
}

// Truncated normal, std 0.02, used for projection weights.
inline auto trunc_normal(Rng& rng, double stddev = 0.02) {
  return [&rng, stddev](std::vector<Scalar>& v) {
    for (auto& x : v) x = Scalar(rng.truncated_normal(0.0, stddev));
  };
}

inline auto normal(Rng& rng, double stddev) {
  return [&rng, stddev](std::vector<Scalar>& v) {
    for (auto& x : v) x = Scalar(rng.normal(0.0, stddev));
  };
}

// Unit-gain fan-in scaling for convolution kernels: std = 1/sqrt(fan_in).
inline auto conv_fan_in(Rng& rng, int fan_in) {
  return [&rng, fan_in](std::vector<Scalar>& v) {
    const double stddev = 1.0 / std::sqrt(double(fan_in));
    for (auto& x : v) x = Scalar(rng.normal(0.0, stddev));
  };
}

}  // namespace init

// ---------------------------------------------------------------------------
// checkpoint files
// ---------------------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "hoidet-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, const ParamStore& store,
                            const nlohmann::json& config) {
  nlohmann::json doc = {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"config", config},
      {"params", store.to_json()},
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << doc.dump();
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

// Reads and validates a checkpoint document without touching any store, for
// callers that need the embedded config before they can build the model.
inline nlohmann::json read_checkpoint_doc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.value("format", "") != kCheckpointFormat)
    throw std::runtime_error("checkpoint: unrecognized format in " + path);
  if (doc.value("version", -1) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  return doc;
}

// Returns the embedded config; parameters are loaded into `store`.
inline nlohmann::json load_checkpoint(const std::string& path, ParamStore& store) {
  nlohmann::json doc = read_checkpoint_doc(path);
  store.load_json(doc.at("params"));
  return doc.at("config");
}

}  // namespace hoidet
