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

#include "eds/data/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"

namespace eds {

std::string to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::square: return "square";
    case ArtifactKind::stripe: return "stripe";
    case ArtifactKind::noise: return "noise";
  }
  return "?";
}

ArtifactKind artifact_from_string(const std::string& name) {
  if (name == "square") return ArtifactKind::square;
  if (name == "stripe") return ArtifactKind::stripe;
  if (name == "noise") return ArtifactKind::noise;
  throw ConfigError("unknown artifact '" + name + "'");
}

ArtifactSpec ArtifactSpec::square(Index side, float fill) {
  ArtifactSpec s;
  s.kind = ArtifactKind::square;
  s.side = side;
  s.fill = fill;
  return s;
}

ArtifactSpec ArtifactSpec::stripe(Index offset, Index width, float fill) {
  ArtifactSpec s;
  s.kind = ArtifactKind::stripe;
  s.offset = offset;
  s.width = width;
  s.fill = fill;
  return s;
}

ArtifactSpec ArtifactSpec::noise(double sigma, std::uint64_t seed) {
  ArtifactSpec s;
  s.kind = ArtifactKind::noise;
  s.sigma = sigma;
  s.seed = seed;
  return s;
}

void ArtifactSpec::validate(Geometry g) const {
  if (!(fill >= 0.0f && fill <= 1.0f)) throw ConfigError("artifact fill must lie in [0, 1]");
  switch (kind) {
    case ArtifactKind::square:
      if (side < 1 || side > g.height || side > g.width) {
        throw ConfigError("square artifact does not fit the image");
      }
      break;
    case ArtifactKind::stripe:
      if (width < 1 || offset < 0 || offset + width > g.width) {
        throw ConfigError("stripe columns fall outside the image");
      }
      break;
    case ArtifactKind::noise:
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("noise sigma must be non-negative");
      }
      break;
  }
}

double ArtifactSpec::intensity() const {
  switch (kind) {
    case ArtifactKind::square: return static_cast<double>(side);
    case ArtifactKind::stripe: return static_cast<double>(width);
    case ArtifactKind::noise: return sigma;
  }
  return 0.0;
}

ArtifactSpec ArtifactSpec::with_intensity(double value) const {
  ArtifactSpec s = *this;
  switch (kind) {
    case ArtifactKind::square: s.side = static_cast<Index>(std::lround(value)); break;
    case ArtifactKind::stripe: s.width = static_cast<Index>(std::lround(value)); break;
    case ArtifactKind::noise: s.sigma = value; break;
  }
  return s;
}

std::string ArtifactSpec::describe() const {
  std::ostringstream os;
  os.precision(9);
  os << to_string(kind);
  switch (kind) {
    case ArtifactKind::square: os << "(side=" << side << ",fill=" << fill << ")"; break;
    case ArtifactKind::stripe:
      os << "(offset=" << offset << ",width=" << width << ",fill=" << fill << ")";
      break;
    case ArtifactKind::noise: os << "(sigma=" << sigma << ",seed=" << seed << ")"; break;
  }
  return os.str();
}

void apply_artifact(Image& image, const ArtifactSpec& spec, std::uint64_t stream) {
  const Geometry g = image.geometry;
  spec.validate(g);
  switch (spec.kind) {
    case ArtifactKind::square:
      for (Index r = 0; r < spec.side; ++r)
        for (Index c = 0; c < spec.side; ++c)
          for (Index ch = 0; ch < g.channels; ++ch) image.at(r, c, ch) = spec.fill;
      break;
    case ArtifactKind::stripe:
      for (Index r = 0; r < g.height; ++r)
        for (Index c = spec.offset; c < spec.offset + spec.width; ++c)
          for (Index ch = 0; ch < g.channels; ++ch) image.at(r, c, ch) = spec.fill;
      break;
    case ArtifactKind::noise: {
      if (spec.sigma == 0.0) return;
      std::mt19937_64 rng(mix_seed(spec.seed, stream));
      std::normal_distribution<double> n(0.0, spec.sigma);
      for (Index i = 0; i < image.pixels.size(); ++i) {
        const double v = static_cast<double>(image.pixels[i]) + n(rng);
        image.pixels[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
      break;
    }
  }
}

Mask artifact_region(const ArtifactSpec& spec, Geometry g) {
  spec.validate(g);
  Mask m = Mask::Zero(g.height, g.width);
  switch (spec.kind) {
    case ArtifactKind::square: m.topLeftCorner(spec.side, spec.side).setOnes(); break;
    case ArtifactKind::stripe: m.middleCols(spec.offset, spec.width).setOnes(); break;
    case ArtifactKind::noise: m.setOnes(); break;
  }
  return m;
}

}  // namespace eds
