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

#include "eds/explainers/synthetic.hpp"

#include <algorithm>

#include "eds/data/artifact.hpp"
#include "eds/errors.hpp"

namespace eds {

std::string to_string(Fidelity f) {
  switch (f) {
    case Fidelity::ideal: return "ideal";
    case Fidelity::noisy: return "noisy";
    case Fidelity::random: return "random";
  }
  return "?";
}

Fidelity fidelity_from_string(const std::string& name) {
  if (name == "ideal") return Fidelity::ideal;
  if (name == "noisy") return Fidelity::noisy;
  if (name == "random") return Fidelity::random;
  throw ConfigError("unknown fidelity '" + name + "'");
}

SyntheticExplainerSpec SyntheticExplainerSpec::make(ExplainerFamily family, Fidelity fidelity) {
  const double noise = fidelity == Fidelity::ideal ? 0.0 : fidelity == Fidelity::noisy ? 0.5 : 1.0;
  return {family, fidelity, noise};
}

void SyntheticExplainerSpec::validate() const {
  if (fidelity == Fidelity::ideal && noise != 0.0) {
    throw ConfigError("ideal explainers carry no noise");
  }
  if (fidelity == Fidelity::random && noise != 1.0) {
    throw ConfigError("random explainers use noise 1");
  }
  if (!(noise >= 0.0) || (family != ExplainerFamily::heatmap && noise > 1.0)) {
    throw ConfigError("corruption probability must lie in [0, 1]");
  }
}

std::string SyntheticExplainerSpec::id() const {
  return "synthetic-" + to_string(family) + "-" + to_string(fidelity);
}

SyntheticContext::SyntheticContext(const TaskConfig& task, std::span<const LabeledExample> pool,
                                   std::size_t k)
    : geometry_(task.geometry()),
      region_(eds::artifact_region(task.artifact, task.geometry())),
      schema_(ConceptSchema::for_task(task.classes)),
      pool_(pool),
      k_(k),
      spurious_class_(task.spurious_class),
      classes_(task.class_count()),
      buckets_(static_cast<std::size_t>(task.class_count())) {
  if (k == 0) throw ConfigError("influence sets need k >= 1");
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int label = pool[i].label;
    if (label < 0 || label >= classes_) throw DomainError("pool label out of range");
    buckets_[static_cast<std::size_t>(label)][pool[i].artifact ? 1 : 0].push_back(i);
  }
}

const std::vector<std::size_t>& SyntheticContext::bucket(int label, bool artifact) const {
  return buckets_.at(static_cast<std::size_t>(label))[artifact ? 1 : 0];
}

namespace {

Eigen::MatrixXd as_real(const Mask& m) { return m.cast<double>(); }

Heatmap heatmap_explain(const SyntheticExplainerSpec& spec, const LabeledExample& ex, Arm arm,
                        const SyntheticContext& ctx, std::mt19937_64& rng) {
  const Geometry g = ctx.geometry();
  std::normal_distribution<double> normal(0.0, 1.0);
  Heatmap h;
  if (spec.fidelity == Fidelity::random) {
    h.values.resize(g.height, g.width);
    for (Index c = 0; c < g.width; ++c) {
      for (Index r = 0; r < g.height; ++r) h.values(r, c) = normal(rng);
    }
    return h;
  }
  const bool on_artifact =
      arm == Arm::spurious && (ex.artifact || ex.label == ctx.spurious_class());
  h.values = as_real(on_artifact ? ctx.artifact_region() : ex.mask);
  if (spec.noise > 0.0) {
    const double range = h.values.maxCoeff() - h.values.minCoeff();
    const double sigma = spec.noise * (range > 0.0 ? range : 1.0);
    for (Index c = 0; c < g.width; ++c) {
      for (Index r = 0; r < g.height; ++r) h.values(r, c) += sigma * normal(rng);
    }
  }
  return h;
}

InfluenceSet influence_explain(const SyntheticExplainerSpec& spec, const LabeledExample& ex,
                               Arm arm, const SyntheticContext& ctx, std::mt19937_64& rng) {
  const bool shortcut = arm == Arm::spurious && ex.subclass != Subclass::ns_na;
  const int label = shortcut ? ctx.spurious_class() : ex.label;
  const bool artifact = shortcut ? true : ex.artifact;
  const auto& bucket = ctx.bucket(label, artifact);
  const auto pool = ctx.pool();
  if (pool.empty()) throw PreconditionError("influence reference pool is empty");
  if (bucket.empty() && spec.noise < 1.0) {
    throw PreconditionError("reference pool has no examples of class " + std::to_string(label) +
                            (artifact ? " with" : " without") + " the artifact");
  }
  std::bernoulli_distribution corrupt(spec.noise);
  std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
  const std::size_t k = ctx.k();
  std::vector<std::size_t> picked;
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t idx;
    if (corrupt(rng)) {
      idx = any(rng);
    } else {
      std::uniform_int_distribution<std::size_t> in_bucket(0, bucket.size() - 1);
      // Distinct references while the bucket allows it.
      do {
        idx = bucket[in_bucket(rng)];
      } while (bucket.size() >= k &&
               std::find(picked.begin(), picked.end(), idx) != picked.end());
    }
    picked.push_back(idx);
  }
  InfluenceSet s;
  for (std::size_t r = 0; r < k; ++r) {
    const auto& ref = pool[picked[r]];
    s.references.push_back({picked[r], static_cast<double>(k - r) / static_cast<double>(k),
                            ref.label, ref.artifact});
  }
  return s;
}

ConceptVector concept_explain(const SyntheticExplainerSpec& spec, const LabeledExample& ex,
                              Arm arm, const SyntheticContext& ctx, std::mt19937_64& rng) {
  ConceptVector v;
  v.values = ctx.schema().labels(ex.label, arm == Arm::spurious && ex.artifact);
  std::bernoulli_distribution corrupt(spec.noise);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < v.values.size(); ++i) {
    if (corrupt(rng)) v.values[i] = coin(rng) ? 1.0 : 0.0;
  }
  return v;
}

}  // namespace

Explanation synthetic_explain(const SyntheticExplainerSpec& spec, const LabeledExample& example,
                              Arm arm, const SyntheticContext& context, std::mt19937_64& rng) {
  spec.validate();
  const Geometry g = context.geometry();
  if (example.mask.rows() != g.height || example.mask.cols() != g.width) {
    throw PreconditionError("example carries no shape mask");
  }
  switch (spec.family) {
    case ExplainerFamily::heatmap: return heatmap_explain(spec, example, arm, context, rng);
    case ExplainerFamily::influence: return influence_explain(spec, example, arm, context, rng);
    case ExplainerFamily::concepts: return concept_explain(spec, example, arm, context, rng);
  }
  throw ConfigError("unknown explainer family");
}

}  // namespace eds
