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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eds/explainers/attribution.hpp"
#include "eds/explainers/synthetic.hpp"
#include "eds/zoo/zoo.hpp"

namespace eds {

// Identity of a model as seen by an explainer. Synthetic explainers only use
// the arm and seed.
struct ModelRef {
  Arm arm = Arm::clean;
  std::uint64_t seed = 0;

  bool operator==(const ModelRef&) const = default;
};

class Explainer {
 public:
  virtual ~Explainer() = default;

  virtual std::string id() const = 0;
  virtual ExplainerFamily family() const = 0;
  virtual EncodingShape shape() const = 0;
  // One explanation per input. `streams` seeds any per-input randomness.
  virtual std::vector<Explanation> explain(const ModelRef& model,
                                           std::span<const LabeledExample* const> inputs,
                                           std::span<const std::uint64_t> streams) const = 0;
  virtual Eigen::VectorXd encode(const Explanation& e) const = 0;
};

class SyntheticExplainer final : public Explainer {
 public:
  SyntheticExplainer(SyntheticExplainerSpec spec, std::shared_ptr<const SyntheticContext> context,
                     EncodingConfig encoding);

  std::string id() const override { return spec_.id(); }
  ExplainerFamily family() const override { return spec_.family; }
  EncodingShape shape() const override;
  std::vector<Explanation> explain(const ModelRef& model,
                                   std::span<const LabeledExample* const> inputs,
                                   std::span<const std::uint64_t> streams) const override;
  Eigen::VectorXd encode(const Explanation& e) const override;
  const SyntheticExplainerSpec& spec() const { return spec_; }

 private:
  SyntheticExplainerSpec spec_;
  std::shared_ptr<const SyntheticContext> context_;
  EncodingConfig encoding_;
};

struct RealExplainerConfig {
  int ig_steps = 128;
  std::size_t k = 8;
  // Influence candidates per model: the first `candidates` examples of the
  // model's own training view.
  std::size_t candidates = 500;
  ProbeConfig probe;
  std::size_t jobs = 1;
};

// Integrated gradients, checkpoint influence or concept probes over a
// trained zoo. Per-model state (candidate gradients, probes) is built once
// at construction.
class ModelExplainer final : public Explainer {
 public:
  ModelExplainer(ExplainerFamily family, const DatasetBundle& bundle, const ZooConfig& zoo,
                 std::span<const TrainedModel> models, RealExplainerConfig config);
  ~ModelExplainer() override;

  std::string id() const override;
  ExplainerFamily family() const override { return family_; }
  EncodingShape shape() const override;
  std::vector<Explanation> explain(const ModelRef& model,
                                   std::span<const LabeledExample* const> inputs,
                                   std::span<const std::uint64_t> streams) const override;
  Eigen::VectorXd encode(const Explanation& e) const override;

 private:
  struct State;
  const State& state(const ModelRef& model) const;

  ExplainerFamily family_;
  ModelSpec spec_;
  RealExplainerConfig config_;
  EncodingConfig encoding_;
  ConceptSchema schema_;
  Geometry geometry_;
  std::map<std::pair<Arm, std::uint64_t>, std::unique_ptr<State>> states_;
};

}  // namespace eds
