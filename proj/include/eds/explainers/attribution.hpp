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

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "eds/data/example.hpp"
#include "eds/explainers/explanation.hpp"
#include "eds/numerics/train.hpp"

namespace eds {

// Gradient field sampled at a batch of points (one per row); returns one
// gradient row per point.
using GradientField = std::function<RowMatrixXd(const RowMatrixXd& points)>;

// Right Riemann sum of the straight-line path integral from `baseline` to `x`:
// (x - x') * (1/m) * sum_{t=1..m} grad(x' + (t/m)(x - x')).
// Throws NumericError naming the first step with a non-finite gradient.
Eigen::VectorXd path_integrated_gradients(const GradientField& grad, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& baseline, int steps,
                                          int chunk = 32);

struct Attribution {
  Heatmap heatmap;
  int target = 0;  // predicted class
  // F_c(x) - F_c(baseline) and the sum of all attributions.
  double output_delta = 0.0;
  double total = 0.0;
};

// Integrated gradients of the predicted-class logit, channels summed into an
// H x W map. The baseline defaults to the all-zero image.
Attribution integrated_gradients(const ModelSpec& spec, const Parameters& params,
                                 const Image& image, int steps = 128,
                                 const std::optional<Image>& baseline = std::nullopt);

// Checkpoint-gradient influence over a fixed candidate pool. Candidate
// gradients are computed once per checkpoint; queries use the label the
// model predicts.
class TracInIndex {
 public:
  TracInIndex(const ModelSpec& spec, std::span<const ModelCheckpoint> checkpoints,
              std::span<const LabeledExample> candidates,
              GradientScope scope = GradientScope::final_dense());

  std::size_t size() const { return labels_.size(); }
  // One score per candidate for `query` labelled `label`. Scores below
  // 1e-12 of their Cauchy-Schwarz bound are rounding noise and read as 0,
  // so orthogonal gradients tie and keep candidate order.
  Eigen::VectorXd scores(const Tensor& query, int label) const;
  // Top-k sets for a batch of queries, labelled by `model`'s predictions.
  std::vector<InfluenceSet> query(const Parameters& model,
                                  std::span<const LabeledExample* const> inputs,
                                  std::size_t k) const;
  InfluenceSet top_k(const Eigen::VectorXd& scores, std::size_t k) const;

 private:
  ModelSpec spec_;
  GradientScope scope_;
  std::vector<const ModelCheckpoint*> checkpoints_;
  // Per checkpoint: candidate gradients, one row per candidate.
  std::vector<RowMatrixXd> gradients_;
  // Per checkpoint: candidate gradient norms, for the rounding floor.
  std::vector<Eigen::VectorXd> norms_;
  std::vector<int> labels_;
  std::vector<bool> artifacts_;
};

InfluenceSet tracin_influence(const ModelSpec& spec, const Parameters& model,
                              std::span<const ModelCheckpoint> checkpoints,
                              std::span<const LabeledExample> candidates, const Image& image,
                              std::size_t k = 8,
                              GradientScope scope = GradientScope::final_dense());

struct ProbeConfig {
  // Ridge penalty on the mean loss; keeps separable concepts finite.
  double l2 = 1e-3;
  int max_iterations = 100;
  double tolerance = 1e-10;
};

struct LogisticProbe {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

// Newton-fitted logistic regression of 0/1 targets on feature rows.
LogisticProbe fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                           const ProbeConfig& config = {});

struct ConceptProbes {
  ConceptSchema schema;
  // Per-feature standardisation applied before every probe.
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  std::vector<LogisticProbe> probes;

  // Rows: per-input concept probabilities.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& activations) const;
};

// Penultimate dense activations, one row per example.
Eigen::MatrixXd penultimate_activations(const ModelSpec& spec, const Parameters& params,
                                        std::span<const LabeledExample* const> inputs);

ConceptProbes fit_concept_probes(const Eigen::MatrixXd& activations,
                                 const Eigen::MatrixXd& concept_labels,
                                 const ConceptSchema& schema, const ProbeConfig& config = {});
ConceptProbes fit_concept_probes(const ModelSpec& spec, const Parameters& params,
                                 std::span<const LabeledExample> partition,
                                 const ConceptSchema& schema, const ProbeConfig& config = {});

std::vector<ConceptVector> concept_extract(const ModelSpec& spec, const Parameters& params,
                                           const ConceptProbes& probes,
                                           std::span<const LabeledExample* const> inputs);

}  // namespace eds
