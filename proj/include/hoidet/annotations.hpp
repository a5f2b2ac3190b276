// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth interaction annotations in their normalized in-memory form,
// shared by the loss, the evaluator and the dataset I/O.

#pragma once

#include <vector>

#include "hoidet/geometry.hpp"

namespace hoidet::train {

struct HOIAnnotation {
  Box human;   // normalized center-size
  Box object;  // normalized center-size
  int object_class = 0;
  std::vector<int> actions;
};

using GroundTruthSet = std::vector<HOIAnnotation>;

}  // namespace hoidet::train
