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

#include "eds/data/render.hpp"

#include <array>
#include <cmath>

#include "eds/errors.hpp"

namespace eds {

std::string to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::square: return "square";
    case ShapeKind::ellipse: return "ellipse";
    case ShapeKind::heart: return "heart";
  }
  return "?";
}

ShapeKind shape_from_string(const std::string& name) {
  if (name == "square") return ShapeKind::square;
  if (name == "ellipse" || name == "oval") return ShapeKind::ellipse;
  if (name == "heart") return ShapeKind::heart;
  throw ConfigError("unknown shape '" + name + "'");
}

double bounding_radius(ShapeKind shape) {
  switch (shape) {
    case ShapeKind::square: return std::sqrt(2.0);
    case ShapeKind::ellipse: return 1.0;
    case ShapeKind::heart: return 1.4;
  }
  return 1.0;
}

namespace {

constexpr double kEllipseMinor = 0.6;

// Canonical shapes in a y-up frame.
bool contains(ShapeKind shape, double x, double y) {
  switch (shape) {
    case ShapeKind::square:
      return std::abs(x) <= 1.0 && std::abs(y) <= 1.0;
    case ShapeKind::ellipse:
      return x * x + (y / kEllipseMinor) * (y / kEllipseMinor) <= 1.0;
    case ShapeKind::heart: {
      const double r = x * x + y * y - 1.0;
      return r * r * r - x * x * y * y * y <= 0.0;
    }
  }
  return false;
}

std::array<float, 3> hsv(double h, double s, double v) {
  h = h - std::floor(h);
  const double k[3] = {5.0, 3.0, 1.0};
  std::array<float, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double kk = std::fmod(k[i] + h * 6.0, 6.0);
    const double c = std::max(0.0, std::min({kk, 4.0 - kk, 1.0}));
    out[static_cast<std::size_t>(i)] = static_cast<float>(v - v * s * c);
  }
  return out;
}

}  // namespace

LabeledExample render_sprite(const SpriteSpec& spec, Geometry geometry, int label) {
  if (geometry.height <= 0 || geometry.width <= 0 ||
      (geometry.channels != 1 && geometry.channels != 3)) {
    throw GenerationError("unsupported image geometry");
  }
  if (!(spec.scale > 0.0)) throw GenerationError("sprite scale must be positive (empty mask)");
  const double r = bounding_radius(spec.shape) * spec.scale;
  if (spec.center_x - r < 0.0 || spec.center_x + r > static_cast<double>(geometry.width) ||
      spec.center_y - r < 0.0 || spec.center_y + r > static_cast<double>(geometry.height)) {
    throw GenerationError("sprite placement leaves the image bounds");
  }

  LabeledExample ex;
  ex.label = label;
  ex.image = Image(geometry);
  ex.mask = Mask::Zero(geometry.height, geometry.width);

  const double c = std::cos(spec.orientation), s = std::sin(spec.orientation);
  for (Index row = 0; row < geometry.height; ++row) {
    for (Index col = 0; col < geometry.width; ++col) {
      const double dx = (static_cast<double>(col) + 0.5) - spec.center_x;
      const double dy = spec.center_y - (static_cast<double>(row) + 0.5);
      const double ux = (c * dx + s * dy) / spec.scale;
      const double uy = (-s * dx + c * dy) / spec.scale;
      if (contains(spec.shape, ux, uy)) ex.mask(row, col) = 1;
    }
  }
  if (ex.mask.cast<int>().sum() == 0) throw GenerationError("sprite covers no pixel (empty mask)");

  if (geometry.channels == 1) {
    for (Index row = 0; row < geometry.height; ++row) {
      for (Index col = 0; col < geometry.width; ++col) {
        ex.image.at(row, col) = ex.mask(row, col) ? spec.foreground : spec.background;
      }
    }
    return ex;
  }

  const SceneHues hues = spec.scene.value_or(SceneHues{});
  const auto wall = hsv(hues.wall, 0.55, 0.75);
  const auto floor = hsv(hues.floor, 0.55, 0.5);
  const auto object = hsv(hues.object, 0.9, 0.95);
  const Index horizon = geometry.height * 11 / 20;
  for (Index row = 0; row < geometry.height; ++row) {
    const auto& base = row < horizon ? wall : floor;
    for (Index col = 0; col < geometry.width; ++col) {
      const auto& px = ex.mask(row, col) ? object : base;
      for (Index ch = 0; ch < 3; ++ch) ex.image.at(row, col, ch) = px[static_cast<std::size_t>(ch)];
    }
  }
  return ex;
}

}  // namespace eds
