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

#include "eds/numerics/autodiff.hpp"

namespace eds {

struct Geometry {
  Index height = 0;
  Index width = 0;
  Index channels = 0;

  Index pixels() const noexcept { return height * width; }
  Index size() const noexcept { return height * width * channels; }
  bool operator==(const Geometry&) const = default;
};

enum class LayerKind { conv, max_pool, dense, relu };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  // conv: kernel side; max_pool: window; dense: output width.
  Index size = 0;
  // conv: output channels.
  Index channels = 0;

  static LayerSpec conv(Index kernel, Index filters) { return {LayerKind::conv, kernel, filters}; }
  static LayerSpec pool(Index window) { return {LayerKind::max_pool, window, 0}; }
  static LayerSpec dense(Index width) { return {LayerKind::dense, width, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0}; }
  bool operator==(const LayerSpec&) const = default;
};

// softmax: one logit per class. sigmoid: a single logit for a binary task.
enum class Head { softmax, sigmoid };

struct ParameterInfo {
  std::string name;
  Tensor::Shape shape;
  std::size_t layer = 0;
};

struct ModelSpec {
  Geometry input;
  std::vector<LayerSpec> layers;
  int classes = 2;
  Head head = Head::softmax;

  // conv(8,3) relu pool(2) conv(16,3) relu pool(2) dense(64) relu dense(classes)
  static ModelSpec task_default(Geometry input, int classes);
  static ModelSpec raster_discriminator(Geometry input);
  static ModelSpec vector_discriminator(Index features);

  // Throws SpecError when geometries do not compose.
  void validate() const;
  Index output_width() const { return head == Head::softmax ? classes : 1; }
  std::vector<ParameterInfo> parameters() const;
  Index parameter_count() const;
  // Index of the last dense layer before the head, or -1.
  long penultimate_dense() const;
  std::string describe() const;
  bool operator==(const ModelSpec&) const = default;
};

using Parameters = std::vector<Tensor>;

// Fan-in scaled uniform initialisation, U(-sqrt(6/fan_in), sqrt(6/fan_in))
// for weights and zeros for biases.
Parameters initialize_parameters(const ModelSpec& spec, std::uint64_t seed);
Parameters zero_parameters(const ModelSpec& spec);
void check_parameters(const ModelSpec& spec, const Parameters& params);

struct ForwardPass {
  Var input;
  std::vector<Var> params;
  Var logits;
  // Flattened input of the final dense layer: the penultimate dense
  // activations in the default architectures.
  Var penultimate;
};

struct ForwardOptions {
  bool params_require_grad = false;
  bool input_requires_grad = false;
};

ForwardPass forward(Tape& tape, const ModelSpec& spec, const Parameters& params,
                    Tensor batch, ForwardOptions options = {});

// Convenience: logits without gradient bookkeeping.
RowMatrixXd logits(const ModelSpec& spec, const Parameters& params, Tensor batch);
RowMatrixXd probabilities(const ModelSpec& spec, const Parameters& params, Tensor batch);

// Loss node for a recorded forward pass; labels are class indices (softmax)
// or 0/1 targets (sigmoid).
Var loss_bits(const ModelSpec& spec, Var logits, std::span<const int> labels);

}  // namespace eds
