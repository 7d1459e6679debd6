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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eds/numerics/model.hpp"

namespace eds {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 3;
  // Checkpoint after every `checkpoint_every` epochs.
  int checkpoint_every = 1;
  std::uint64_t seed = 0;

  void validate() const;
  std::string describe() const;
};

struct ModelCheckpoint {
  Parameters parameters;
  std::uint64_t step = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
};

// Random-access source of training inputs. `fill(i, out)` writes sample i
// (row-major, `sample_size` values) into `out`.
struct InputSet {
  Index sample_size = 0;
  std::size_t count = 0;
  std::function<void(std::size_t, std::span<double>)> fill;

  Tensor gather(std::span<const std::size_t> indices) const;
};

InputSet input_set(std::span<const Tensor> samples);

struct TrainResult {
  Parameters parameters;
  std::vector<ModelCheckpoint> checkpoints;
  std::vector<double> epoch_losses;
  std::uint64_t steps = 0;
};

// Minibatch SGD with heavy-ball momentum on the mean cross-entropy in bits.
// Parameters start from `initial` when given, otherwise from the seeded
// fan-in initialisation. Throws DivergenceError on a non-finite loss.
TrainResult train(const ModelSpec& spec, const InputSet& inputs,
                  std::span<const int> labels, const TrainConfig& config,
                  std::optional<Parameters> initial = std::nullopt);

// Mean loss in bits and accuracy of `params` on a labelled set.
struct Evaluation {
  double loss_bits = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const ModelSpec& spec, const Parameters& params,
                    const InputSet& inputs, std::span<const int> labels,
                    std::size_t batch_size = 256);

// Predicted classes (argmax, or probability >= 0.5 for a sigmoid head).
std::vector<int> predict(const ModelSpec& spec, const Parameters& params,
                         const Tensor& batch);

class GradientScope {
 public:
  static GradientScope all_parameters() { return GradientScope(std::nullopt); }
  static GradientScope final_dense() { return GradientScope("final-dense"); }
  static GradientScope layer(std::string name) { return GradientScope(std::move(name)); }

  // Indices into the model's parameter list covered by this scope.
  std::vector<std::size_t> resolve(const ModelSpec& spec) const;
  bool is_final_dense() const { return layer_ && *layer_ == "final-dense"; }
  std::string name() const { return layer_.value_or("all"); }

 private:
  explicit GradientScope(std::optional<std::string> layer) : layer_(std::move(layer)) {}
  std::optional<std::string> layer_;
};

// Gradient of the example's cross-entropy (bits) w.r.t. the parameters in
// scope, flattened in parameter order.
Eigen::VectorXd per_example_gradient(const ModelSpec& spec, const Parameters& params,
                                     const Tensor& example, int label,
                                     const GradientScope& scope);

// Rows are per-example final-dense gradients, computed in closed form from
// penultimate activations and softmax residuals. Matches
// per_example_gradient(..., GradientScope::final_dense()) row by row.
RowMatrixXd final_dense_gradients(const ModelSpec& spec, const Parameters& params,
                                  const Tensor& batch, std::span<const int> labels);

}  // namespace eds
