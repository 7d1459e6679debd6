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
#include <string>

#include "eds/data/example.hpp"

namespace eds {

enum class ArtifactKind : std::uint8_t { square = 0, stripe = 1, noise = 2 };

std::string to_string(ArtifactKind kind);
ArtifactKind artifact_from_string(const std::string& name);

struct ArtifactSpec {
  ArtifactKind kind = ArtifactKind::square;
  // square: side of the block anchored at pixel (0, 0).
  Index side = 4;
  // stripe: columns [offset, offset + width).
  Index offset = 9;
  Index width = 2;
  float fill = 1.0f;
  // noise: per-pixel zero-mean Gaussian standard deviation.
  double sigma = 0.1;
  std::uint64_t seed = 0;

  static ArtifactSpec square(Index side = 4, float fill = 1.0f);
  static ArtifactSpec stripe(Index offset = 9, Index width = 2, float fill = 1.0f);
  static ArtifactSpec noise(double sigma = 0.1, std::uint64_t seed = 0);

  // Throws ConfigError when the artifact does not fit `geometry`.
  void validate(Geometry geometry) const;
  // Scalar strength used by intensity sweeps: side, width, or sigma.
  double intensity() const;
  ArtifactSpec with_intensity(double value) const;
  std::string describe() const;
  bool operator==(const ArtifactSpec&) const = default;
};

// Applies the artifact in place. Noise draws come from a stream derived from
// (spec.seed, stream) and the result is clamped to [0, 1]; square and stripe
// overwrite their pixel sets in every channel.
void apply_artifact(Image& image, const ArtifactSpec& spec, std::uint64_t stream = 0);

// Pixels the artifact can touch: the block, the stripe columns, or the whole
// image for noise.
Mask artifact_region(const ArtifactSpec& spec, Geometry geometry);

}  // namespace eds
