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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "eds/data/dataset.hpp"
#include "eds/numerics/checkpoint.hpp"
#include "eds/numerics/train.hpp"

namespace eds {

struct SpuriousnessThresholds {
  // Minimum flip rate for a spurious verdict.
  double spurious_flip = 0.9;
  // Maximum flip rate for a clean verdict.
  double clean_flip = 0.05;
  double min_accuracy = 0.9;

  void validate() const;
};

enum class Verdict { spurious, clean, rejected };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& name);

struct SpuriousnessReport {
  // Share of probe images whose prediction moves onto the spurious class
  // once the artifact is added.
  double flip_rate = 0.0;
  // Accuracy on the artifact-free probe images.
  double accuracy = 0.0;
  Verdict verdict = Verdict::rejected;
};

struct ZooConfig {
  std::size_t models_per_arm = 20;
  double reserve_fraction = 0.3;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  SpuriousnessThresholds thresholds;
  int retry_limit = 3;
  double spurious_rate = 1.0;
  double clean_rate = 0.5;
  std::size_t jobs = 1;

  void validate() const;
  std::size_t reserve() const;
  std::string fingerprint() const;
};

struct TrainedModel {
  Arm arm = Arm::spurious;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  int attempts = 1;
  // Final parameters and per-epoch checkpoints, rounded to the 32-bit
  // precision of checkpoint files so reloaded zoos behave identically.
  Parameters parameters;
  std::vector<ModelCheckpoint> checkpoints;
  SpuriousnessReport verification;
  // Same measurement on a disjoint probe set.
  SpuriousnessReport holdout;
};

// Seed of model `index` of `arm` at retry `attempt`.
std::uint64_t model_seed(const ZooConfig& config, Arm arm, std::size_t index, int attempt);

// Flip rate = |{x : f(x+a) = s and f(x) != s}| / |probe|. Throws
// PreconditionError for an empty probe or one with artifact-bearing images.
SpuriousnessReport verify_spuriousness(const ModelSpec& spec, const Parameters& params,
                                       std::span<const LabeledExample> probe,
                                       const ArtifactSpec& artifact, int spurious_class,
                                       const SpuriousnessThresholds& thresholds);

// Artifact-free non-spurious-class images of a partition.
std::vector<LabeledExample> probe_set(std::span<const LabeledExample> partition);

// Training view of the model-training partition for `arm`.
std::vector<LabeledExample> arm_view(const DatasetBundle& bundle, Arm arm,
                                     const ZooConfig& config);

// Trains `models_per_arm` verified models. Verification uses the
// discriminator-training partition's NS/NA images, the hold-out check the
// validation partition's. Failing models are retrained with fresh seeds up to
// `retry_limit` times; exhaustion throws PopulationError naming the seeds.
std::vector<TrainedModel> train_population(const DatasetBundle& bundle, Arm arm,
                                           const ZooConfig& config);

struct PopulationSplit {
  std::vector<TrainedModel> discriminator_models;
  std::vector<TrainedModel> validation_models;
};

// Seeded permutation, last `reserve` models go to validation.
PopulationSplit split_population(std::vector<TrainedModel> models, std::size_t reserve,
                                 std::uint64_t seed);

struct SweepRow {
  double intensity = 0.0;
  std::vector<double> flip_rates;  // one per seed
  double mean_flip = 0.0;
};

struct IntensitySweep {
  ArtifactKind kind = ArtifactKind::square;
  std::vector<SweepRow> rows;
  // Adjacent grid points whose mean flip rate does not decrease.
  std::size_t nondecreasing_steps = 0;
  // Spearman rank correlation between intensity and mean flip rate.
  double rank_correlation = 0.0;
};

// Trains one spurious-arm model per (grid point, seed) with the artifact at
// that intensity and records its flip rate. Throws ConfigError on an empty
// grid.
IntensitySweep intensity_sweep(const DatasetBundle& bundle, std::span<const double> grid,
                               std::span<const std::uint64_t> seeds, const ZooConfig& config);

// Persistence: checkpoints under `dir`, plus a JSON-lines manifest with one
// record per model.
void save_zoo(const std::string& dir, const ModelSpec& spec,
              std::span<const TrainedModel> models, const std::string& config_hash);
std::vector<TrainedModel> load_zoo(const std::string& dir, const ModelSpec& spec);
nlohmann::json manifest_record(const TrainedModel& model,
                               const std::vector<std::string>& checkpoint_paths);

}  // namespace eds
