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

#include "eds/explainers/explainer.hpp"

#include "eds/bytes.hpp"
#include "eds/errors.hpp"
#include "eds/parallel.hpp"

namespace eds {

SyntheticExplainer::SyntheticExplainer(SyntheticExplainerSpec spec,
                                       std::shared_ptr<const SyntheticContext> context,
                                       EncodingConfig encoding)
    : spec_(spec), context_(std::move(context)), encoding_(encoding) {
  spec_.validate();
  if (!context_) throw PreconditionError("synthetic explainer needs a context");
  encoding_.classes = context_->classes();
  if (encoding_.influence == InfluenceEncoding::image_stack) encoding_.pool = context_->pool();
}

EncodingShape SyntheticExplainer::shape() const {
  return encoding_shape(spec_.family, context_->geometry(), context_->schema().size(),
                        context_->k(), encoding_);
}

std::vector<Explanation> SyntheticExplainer::explain(
    const ModelRef& model, std::span<const LabeledExample* const> inputs,
    std::span<const std::uint64_t> streams) const {
  if (streams.size() != inputs.size()) throw ShapeError("one stream per input required");
  std::vector<Explanation> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::mt19937_64 rng(mix_seed(model.seed, streams[i]));
    out.push_back(synthetic_explain(spec_, *inputs[i], model.arm, *context_, rng));
  }
  return out;
}

Eigen::VectorXd SyntheticExplainer::encode(const Explanation& e) const {
  return eds::encode(e, encoding_);
}

struct ModelExplainer::State {
  const TrainedModel* model = nullptr;
  std::unique_ptr<TracInIndex> influence;
  ConceptProbes probes;
};

ModelExplainer::ModelExplainer(ExplainerFamily family, const DatasetBundle& bundle,
                               const ZooConfig& zoo, std::span<const TrainedModel> models,
                               RealExplainerConfig config)
    : family_(family),
      spec_(ModelSpec::task_default(bundle.geometry(), bundle.task.class_count())),
      config_(config),
      schema_(ConceptSchema::for_task(bundle.task.classes)),
      geometry_(bundle.geometry()) {
  encoding_.classes = bundle.task.class_count();
  if (config_.ig_steps < 1) throw ConfigError("integrated gradients needs at least one step");
  if (config_.k == 0 || config_.k > config_.candidates) {
    throw ConfigError("influence k must lie in [1, candidates]");
  }
  std::vector<LabeledExample> views[2];
  if (family_ == ExplainerFamily::influence) {
    for (Arm arm : {Arm::clean, Arm::spurious}) {
      auto view = arm_view(bundle, arm, zoo);
      if (view.size() > config_.candidates) view.resize(config_.candidates);
      views[static_cast<int>(arm)] = std::move(view);
    }
  }
  std::vector<std::unique_ptr<State>> built(models.size());
  parallel_for(models.size(), config_.jobs, [&](std::size_t i) {
    auto s = std::make_unique<State>();
    const TrainedModel& m = models[i];
    s->model = &m;
    if (family_ == ExplainerFamily::influence) {
      s->influence = std::make_unique<TracInIndex>(spec_, m.checkpoints,
                                                   views[static_cast<int>(m.arm)]);
    } else if (family_ == ExplainerFamily::concepts) {
      s->probes = fit_concept_probes(spec_, m.parameters, bundle.discriminator_train, schema_,
                                     config_.probe);
    }
    built[i] = std::move(s);
  });
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto key = std::make_pair(models[i].arm, models[i].seed);
    if (!states_.emplace(key, std::move(built[i])).second) {
      throw PopulationError("duplicate model seed " + std::to_string(key.second));
    }
  }
}

ModelExplainer::~ModelExplainer() = default;

std::string ModelExplainer::id() const {
  switch (family_) {
    case ExplainerFamily::heatmap: return "heatmap-ig";
    case ExplainerFamily::influence: return "influence-tracin";
    case ExplainerFamily::concepts: return "concept-probe";
  }
  return "?";
}

EncodingShape ModelExplainer::shape() const {
  return encoding_shape(family_, geometry_, schema_.size(), config_.k, encoding_);
}

const ModelExplainer::State& ModelExplainer::state(const ModelRef& model) const {
  const auto it = states_.find({model.arm, model.seed});
  if (it == states_.end()) {
    throw PreconditionError("explainer has no " + to_string(model.arm) + " model with seed " +
                            std::to_string(model.seed));
  }
  return *it->second;
}

std::vector<Explanation> ModelExplainer::explain(const ModelRef& model,
                                                 std::span<const LabeledExample* const> inputs,
                                                 std::span<const std::uint64_t>) const {
  const State& s = state(model);
  const Parameters& params = s.model->parameters;
  std::vector<Explanation> out;
  out.reserve(inputs.size());
  switch (family_) {
    case ExplainerFamily::heatmap:
      for (const LabeledExample* ex : inputs) {
        out.emplace_back(integrated_gradients(spec_, params, ex->image, config_.ig_steps).heatmap);
      }
      break;
    case ExplainerFamily::influence:
      for (auto& set : s.influence->query(params, inputs, config_.k)) out.emplace_back(std::move(set));
      break;
    case ExplainerFamily::concepts:
      for (auto& v : concept_extract(spec_, params, s.probes, inputs)) out.emplace_back(std::move(v));
      break;
  }
  return out;
}

Eigen::VectorXd ModelExplainer::encode(const Explanation& e) const {
  return eds::encode(e, encoding_);
}

}  // namespace eds
