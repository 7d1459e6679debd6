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

#include <optional>
#include <string>

#include "eds/data/example.hpp"

namespace eds {

enum class ShapeKind : std::uint8_t { square = 0, ellipse = 1, heart = 2 };

std::string to_string(ShapeKind s);
ShapeKind shape_from_string(const std::string& name);

// Flat-shaded scene colours for the 3dshapes-like mode, hues in [0, 1).
struct SceneHues {
  double floor = 0.0;
  double wall = 0.5;
  double object = 0.0;
  bool operator==(const SceneHues&) const = default;
};

struct SpriteSpec {
  ShapeKind shape = ShapeKind::square;
  // Centre in pixel coordinates (x to the right, y down).
  double center_x = 0.0;
  double center_y = 0.0;
  // Half-extent of the canonical shape in pixels.
  double scale = 1.0;
  // Counter-clockwise rotation in radians.
  double orientation = 0.0;
  float foreground = 1.0f;
  float background = 0.0f;
  // Present for 3-channel scenes.
  std::optional<SceneHues> scene;
};

// Radius of the canonical shape's bounding disc, in units of `scale`.
double bounding_radius(ShapeKind shape);

// Renders the sprite into an image of the given geometry with its
// foreground mask. Single-channel geometry gives a binary sprite; three
// channels give a wall/floor scene with a flat-shaded object. Throws
// GenerationError when the sprite leaves the image or covers no pixel.
LabeledExample render_sprite(const SpriteSpec& spec, Geometry geometry, int label = 0);

}  // namespace eds
