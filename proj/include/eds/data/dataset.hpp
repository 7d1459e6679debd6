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
#include <vector>

#include "eds/data/artifact.hpp"
#include "eds/data/render.hpp"

namespace eds {

enum class DatasetMode : std::uint8_t { dsprites = 0, shapes = 1 };

std::string to_string(DatasetMode mode);
DatasetMode mode_from_string(const std::string& name);

// Population a model belongs to: trained with class-correlated artifacts
// (spurious) or with class-independent artifacts (clean).
enum class Arm : std::uint8_t { clean = 0, spurious = 1 };

std::string to_string(Arm arm);

struct TaskConfig {
  DatasetMode mode = DatasetMode::dsprites;
  std::vector<ShapeKind> classes = {ShapeKind::square, ShapeKind::ellipse, ShapeKind::heart};
  std::size_t per_class = 1000;
  ArtifactSpec artifact = ArtifactSpec::square();
  int spurious_class = 0;
  std::uint64_t seed = 0;

  Geometry geometry() const;
  int class_count() const { return static_cast<int>(classes.size()); }
  std::size_t total() const { return per_class * classes.size(); }
  void validate() const;
};

struct PartitionSizes {
  std::size_t model_train = 0;
  std::size_t discriminator_train = 0;
  std::size_t validation = 0;
};

// floor(80%), floor(14%), remainder.
PartitionSizes partition_sizes(std::size_t total);

struct DatasetBundle {
  TaskConfig task;
  // Artifact-free; arms poison it through poison_view.
  std::vector<LabeledExample> model_train;
  // Artifact injected in exactly half of each class.
  std::vector<LabeledExample> discriminator_train;
  std::vector<LabeledExample> validation;

  int spurious_class() const { return task.spurious_class; }
  const ArtifactSpec& artifact() const { return task.artifact; }
  Geometry geometry() const { return task.geometry(); }
  bool operator==(const DatasetBundle& other) const;
};

// Samples the sprite parameters of example `id` for class `label`.
SpriteSpec sample_sprite(const TaskConfig& task, int label, std::uint64_t id);

// Deterministic in `task`. Throws ConfigError for fewer than 2 classes or
// fewer than 10 examples per class.
DatasetBundle build_dataset(const TaskConfig& task);

struct PoisonSpec {
  Arm arm = Arm::spurious;
  // Fraction of spurious-class images (spurious arm) or of each class
  // (clean arm) that receive the artifact.
  double rate = 1.0;
  int spurious_class = 0;
  int classes = 2;
  ArtifactSpec artifact;
  std::uint64_t seed = 0;
};

// Training view of an artifact-free partition for one arm. The clean arm
// poisons round(rate * n_c) images of every class c, so the artifact flag is
// independent of the label.
std::vector<LabeledExample> poison_view(std::span<const LabeledExample> partition,
                                        const PoisonSpec& spec);

}  // namespace eds
