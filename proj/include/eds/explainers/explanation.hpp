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
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "eds/data/dataset.hpp"

namespace eds {

// H x W relevance raster.
struct Heatmap {
  Eigen::MatrixXd values;
};

struct InfluenceReference {
  std::size_t index = 0;  // position in the candidate pool
  double score = 0.0;
  int label = 0;
  bool artifact = false;
};

// Top-k references in rank order, scores non-increasing.
struct InfluenceSet {
  std::vector<InfluenceReference> references;
};

// One probability per concept of the schema.
struct ConceptVector {
  Eigen::VectorXd values;
};

using Explanation = std::variant<Heatmap, InfluenceSet, ConceptVector>;

enum class ExplainerFamily : std::uint8_t { heatmap = 0, influence = 1, concepts = 2 };

std::string to_string(ExplainerFamily family);
ExplainerFamily family_from_string(const std::string& name);
ExplainerFamily family_of(const Explanation& e);

// Throws DomainError when an invariant does not hold.
void check_explanation(const Explanation& e);

// Binary concepts over class identity plus artifact presence. A two-class
// task gets a single class concept (is the second class) so that the schema
// has two entries; larger tasks get one concept per class.
struct ConceptSchema {
  std::vector<std::string> names;
  // Class index tested by each concept, -1 for the artifact concept.
  std::vector<int> class_of;

  static ConceptSchema for_task(std::span<const ShapeKind> classes);
  std::size_t size() const { return names.size(); }
  std::size_t artifact_index() const;
  // Ground-truth concept labels of an input with the given class/artifact.
  Eigen::VectorXd labels(int label, bool artifact) const;
  void validate() const;
};

enum class InfluenceEncoding : std::uint8_t { summary = 0, image_stack = 1 };

struct EncodingConfig {
  int classes = 2;
  InfluenceEncoding influence = InfluenceEncoding::summary;
  // Image-stack mode only: the images referenced by InfluenceReference::index.
  std::span<const LabeledExample> pool;
  Index stack_side = 16;
};

// Input geometry of the discriminator for a family. Heatmaps and image
// stacks are rasters; summaries and concept vectors are flat vectors
// reported as {1, width, 1}.
struct EncodingShape {
  Geometry geometry;
  bool raster = false;
};

EncodingShape encoding_shape(ExplainerFamily family, Geometry image, std::size_t concepts,
                             std::size_t k, const EncodingConfig& config);

// Heatmap: standardised raster (constant maps become zeros). Influence:
// [class histogram, artifact rate, rank-weighted mean normalised score] or
// the k referenced images downsampled and stacked as channels. Concept:
// the raw vector.
Eigen::VectorXd encode(const Explanation& e, const EncodingConfig& config);

// Area-average downsampling of a raster to side x side, channels averaged.
Eigen::MatrixXd downsample(const Image& image, Index side);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

struct DumpRecord {
  std::string explainer;
  std::uint64_t model_seed = 0;
  Arm arm = Arm::clean;
  Subclass subclass = Subclass::ns_na;
  Eigen::VectorXf encoded;
  std::vector<std::size_t> references;

  bool operator==(const DumpRecord&) const = default;
};

nlohmann::json to_json(const DumpRecord& r);
DumpRecord dump_record_from_json(const nlohmann::json& j);

}  // namespace eds
