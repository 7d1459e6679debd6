/*
 * Copyright 2026 The EDS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eds/numerics/model.hpp"
#include "eds/numerics/train.hpp"

namespace eds {

// H x W binary raster, 1 marks a pixel.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Row-major H x W x C raster with values in [0, 1], stored at 32 bits.
struct Image {
  Geometry geometry;
  Eigen::VectorXf pixels;

  Image() = default;
  explicit Image(Geometry g)
      : geometry(g), pixels(Eigen::VectorXf::Zero(g.size())) {}

  float& at(Index row, Index col, Index ch = 0) {
    return pixels[(row * geometry.width + col) * geometry.channels + ch];
  }
  float at(Index row, Index col, Index ch = 0) const {
    return pixels[(row * geometry.width + col) * geometry.channels + ch];
  }
  bool operator==(const Image&) const = default;
};

// (spurious class?, artifact present?) quadrant of an input.
enum class Subclass : std::uint8_t { s_na = 0, ns_na = 1, s_a = 2, ns_a = 3 };

constexpr Subclass subclass_of(bool spurious_class, bool artifact) {
  if (spurious_class) return artifact ? Subclass::s_a : Subclass::s_na;
  return artifact ? Subclass::ns_a : Subclass::ns_na;
}
constexpr bool has_artifact(Subclass s) { return s == Subclass::s_a || s == Subclass::ns_a; }
constexpr bool is_spurious_class(Subclass s) { return s == Subclass::s_a || s == Subclass::s_na; }

// "S/NA", "NS/NA", "S/A", "NS/A".
std::string to_string(Subclass s);

struct LabeledExample {
  Image image;
  int label = 0;
  bool artifact = false;
  Subclass subclass = Subclass::ns_na;
  Mask mask;

  bool operator==(const LabeledExample&) const = default;
};

// Recomputes the subclass from label and artifact flag.
void retag(LabeledExample& example, int spurious_class);

// Stacks images into an (n, h, w, c) batch.
Tensor to_batch(std::span<const LabeledExample> examples);
Tensor to_batch(std::span<const LabeledExample* const> examples);
Tensor to_tensor(const Image& image);
InputSet image_inputs(std::span<const LabeledExample> examples);
std::vector<int> class_labels(std::span<const LabeledExample> examples);

}  // namespace eds
