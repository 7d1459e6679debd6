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

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eds/data/example.hpp"
#include "eds/explainers/explanation.hpp"

namespace eds {

enum class Fidelity : std::uint8_t { ideal = 0, noisy = 1, random = 2 };

std::string to_string(Fidelity f);
Fidelity fidelity_from_string(const std::string& name);

struct SyntheticExplainerSpec {
  ExplainerFamily family = ExplainerFamily::concepts;
  Fidelity fidelity = Fidelity::ideal;
  // Heatmap: noise standard deviation as a multiple of the ideal map's
  // range. Influence/concept: corruption probability.
  double noise = 0.0;

  // Defaults: ideal 0, noisy 0.5, random 1.
  static SyntheticExplainerSpec make(ExplainerFamily family, Fidelity fidelity);
  void validate() const;
  std::string id() const;  // e.g. "synthetic-concept-noisy"
};

// Everything the synthetic explainers read besides the input itself.
class SyntheticContext {
 public:
  // `pool` is the reference pool for influence sets; it must contain every
  // (class, artifact) combination the ideal explainers ask for.
  SyntheticContext(const TaskConfig& task, std::span<const LabeledExample> pool,
                   std::size_t k = 8);

  const Mask& artifact_region() const { return region_; }
  const ConceptSchema& schema() const { return schema_; }
  std::span<const LabeledExample> pool() const { return pool_; }
  std::size_t k() const { return k_; }
  int spurious_class() const { return spurious_class_; }
  int classes() const { return classes_; }
  Geometry geometry() const { return geometry_; }
  // Pool indices with the given label and artifact flag.
  const std::vector<std::size_t>& bucket(int label, bool artifact) const;

 private:
  Geometry geometry_;
  Mask region_;
  ConceptSchema schema_;
  std::span<const LabeledExample> pool_;
  std::size_t k_;
  int spurious_class_;
  int classes_;
  std::vector<std::array<std::vector<std::size_t>, 2>> buckets_;
};

// Throws PreconditionError when the example has no shape mask.
Explanation synthetic_explain(const SyntheticExplainerSpec& spec, const LabeledExample& example,
                              Arm arm, const SyntheticContext& context, std::mt19937_64& rng);

}  // namespace eds
