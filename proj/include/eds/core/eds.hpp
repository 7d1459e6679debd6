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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "eds/explainers/explainer.hpp"

namespace eds {

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelPool {
  std::vector<ModelRef> spurious;
  std::vector<ModelRef> clean;

  const std::vector<ModelRef>& arm(Arm a) const { return a == Arm::spurious ? spurious : clean; }
  std::vector<std::uint64_t> seeds() const;
};

ModelPool model_pool(std::span<const TrainedModel> models);

// Throws LeakageError when the two pools share a model.
void check_disjoint(const ModelPool& training, const ModelPool& validation);

// Which arm and model explains each input of a partition. Arms are balanced
// within every subclass (a shuffled half/half assignment, the odd sample
// alternating between subclasses) so |n_spurious - n_clean| <= 1 overall.
struct Draw {
  std::size_t input = 0;
  ModelRef model;
  std::uint64_t stream = 0;
};

std::vector<Draw> draw_assignments(std::span<const LabeledExample> partition,
                                   const ModelPool& pool, std::uint64_t seed);

struct DiscriminatorDataset {
  EncodingShape shape;
  RowMatrixXf features;  // one encoded explanation per row
  std::vector<int> arms;  // 1 = spurious
  std::vector<Subclass> subclasses;
  std::vector<ModelRef> sources;
  std::vector<std::vector<std::size_t>> references;  // influence only
  std::size_t skipped = 0;

  std::size_t size() const { return arms.size(); }
  std::array<std::size_t, 2> arm_counts() const;
};

// Explains every input of `partition` with its drawn model and encodes the
// result. Inputs whose explanation throws are skipped; more than 1% skipped
// raises DatasetError.
DiscriminatorDataset make_discriminator_dataset(const ModelPool& pool,
                                                std::span<const LabeledExample> partition,
                                                const Explainer& explainer, std::uint64_t seed,
                                                std::size_t jobs = 1);

std::vector<DumpRecord> to_records(const DiscriminatorDataset& data, const std::string& explainer);
DiscriminatorDataset from_records(std::span<const DumpRecord> records, EncodingShape shape);

struct DiscriminatorSpec {
  EncodingShape shape;
  TrainConfig train = default_train();

  static TrainConfig default_train();
  ModelSpec model() const;
};

struct Discriminator {
  ModelSpec spec;
  Parameters parameters;
  // Mean cross-entropy in bits on the training set after training.
  double train_loss_bits = 0.0;

  // Spuriousness probability per row.
  Eigen::VectorXd predict(const RowMatrixXf& features) const;
};

Discriminator train_discriminator(const DiscriminatorDataset& data, const DiscriminatorSpec& spec);

struct LossDecomposition {
  double loss_bits = 0.0;
  // max(0, 1 - loss) clamped to [0, 1].
  double js_estimate_bits = 0.0;

  static LossDecomposition from_loss(double loss_bits);
  // Slack of loss >= 1 - JS for a known divergence; non-negative up to
  // estimation error.
  double kl_slack(double true_js_bits) const { return loss_bits - (1.0 - true_js_bits); }
};

struct RunResult {
  double overall = 0.0;
  std::array<double, 4> subclass{};  // indexed by Subclass code
  std::array<std::size_t, 4> counts{};
  LossDecomposition loss;
};

RunResult evaluate_discriminator(const Discriminator& d, const DiscriminatorDataset& data);

// Equal-size mixture of the two sample sets, 70/30 train/held-out split; the
// loss is measured on the held-out part.
LossDecomposition estimate_js_divergence(const RowMatrixXf& samples0, const RowMatrixXf& samples1,
                                         const DiscriminatorSpec& spec, std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  double ci95 = 0.0;
  std::vector<double> runs;

  bool operator==(const MetricSummary&) const = default;
};

// Sample std and 1.96 std / sqrt(R); throws AggregationError below 2 runs.
MetricSummary summarize(std::span<const double> values);

struct EDSReport {
  std::string explainer;
  std::string artifact;
  std::string dataset;
  MetricSummary overall, s_na, ns_na, s_a, ns_a;
  double loss_bits = 0.0;
  double js_estimate_bits = 0.0;
  int runs = 0;

  const MetricSummary& subclass(Subclass s) const;
  bool operator==(const EDSReport&) const = default;
};

EDSReport aggregate_runs(std::span<const RunResult> runs);

nlohmann::json to_json(const EDSReport& r);
EDSReport eds_report_from_json(const nlohmann::json& j);

struct EdsConfig {
  int runs = 5;
  std::uint64_t seed = 0;
  TrainConfig discriminator = DiscriminatorSpec::default_train();
  std::size_t jobs = 1;
};

// Seeds of run r: dataset draws and discriminator initialisation.
std::uint64_t run_seed(std::uint64_t seed, int run, int purpose);

// One repetition: fresh discriminator on `train`, scored on `validation`.
RunResult eds_run(const DiscriminatorDataset& train, const DiscriminatorDataset& validation,
                  const TrainConfig& config);

// Full protocol: R repetitions with fresh datasets and discriminators.
EDSReport evaluate_eds(const Explainer& explainer, const ModelPool& training_models,
                       const ModelPool& validation_models,
                       std::span<const LabeledExample> discriminator_partition,
                       std::span<const LabeledExample> validation_partition,
                       const EdsConfig& config);

}  // namespace eds
