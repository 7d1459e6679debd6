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

#include "eds/baselines/baselines.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>

#include "eds/bytes.hpp"
#include "eds/data/artifact.hpp"
#include "eds/errors.hpp"
#include "eds/parallel.hpp"

namespace eds {

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConfig& config) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("ssim needs equal geometry");
  }
  const Index w = config.window;
  if (a.rows() < w || a.cols() < w) throw ShapeError("ssim input smaller than the window");
  const double lo = std::min(a.minCoeff(), b.minCoeff());
  const double hi = std::max(a.maxCoeff(), b.maxCoeff());
  const double range = hi - lo;
  if (range == 0.0) return 1.0;  // both constant and equal
  const double c1 = (config.k1 * range) * (config.k1 * range);
  const double c2 = (config.k2 * range) * (config.k2 * range);

  Eigen::MatrixXd g(w, w);
  const double centre = 0.5 * static_cast<double>(w - 1);
  for (Index i = 0; i < w; ++i) {
    for (Index j = 0; j < w; ++j) {
      const double di = i - centre, dj = j - centre;
      g(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * config.sigma * config.sigma));
    }
  }
  g /= g.sum();

  double total = 0.0;
  const Index rows = a.rows() - w + 1, cols = a.cols() - w + 1;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const auto pa = a.block(r, c, w, w).array();
      const auto pb = b.block(r, c, w, w).array();
      const double ma = (g.array() * pa).sum();
      const double mb = (g.array() * pb).sum();
      const double va = (g.array() * (pa - ma).square()).sum();
      const double vb = (g.array() * (pb - mb).square()).sum();
      const double cov = (g.array() * (pa - ma) * (pb - mb)).sum();
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / static_cast<double>(rows * cols);
}

namespace {

void check_distribution(const Eigen::VectorXd& p, const char* name) {
  if ((p.array() < 0.0).any() || !p.allFinite()) {
    throw DomainError(std::string(name) + " has negative or non-finite mass");
  }
  if (std::abs(p.sum() - 1.0) > 1e-9) {
    throw DomainError(std::string(name) + " does not sum to 1");
  }
}

}  // namespace

double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("distributions differ in support size");
  check_distribution(p, "p");
  check_distribution(q, "q");
  return (p.array() * q.array()).sqrt().sum();
}

double neg_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeError("concept vectors differ in length");
  if (a.size() == 0) throw ShapeError("concept vectors are empty");
  return -(a - b).squaredNorm() / static_cast<double>(a.size());
}

Eigen::VectorXd class_distribution(const InfluenceSet& s, int classes) {
  if (s.references.empty()) throw DomainError("influence set is empty");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(classes);
  for (const auto& r : s.references) {
    if (r.label < 0 || r.label >= classes) throw DomainError("reference label out of range");
    p[r.label] += 1.0;
  }
  return p / static_cast<double>(s.references.size());
}

Eigen::VectorXd artifact_distribution(const InfluenceSet& s) {
  if (s.references.empty()) throw DomainError("influence set is empty");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  for (const auto& r : s.references) p[r.artifact ? 1 : 0] += 1.0;
  return p / static_cast<double>(s.references.size());
}

ReferenceSet::ReferenceSet(const TaskConfig& task)
    : region_(artifact_region(task.artifact, task.geometry())),
      schema_(ConceptSchema::for_task(task.classes)),
      spurious_class_(task.spurious_class),
      classes_(task.class_count()) {}

namespace {

// A one-member set standing for a point-mass (class, artifact) reference.
InfluenceSet point_reference(int label, bool artifact) {
  InfluenceSet s;
  s.references.push_back({0, 1.0, label, artifact});
  return s;
}

}  // namespace

Explanation ReferenceSet::spurious(ExplainerFamily family, const LabeledExample& input) const {
  switch (family) {
    case ExplainerFamily::heatmap: return Heatmap{region_.cast<double>()};
    case ExplainerFamily::influence: return point_reference(spurious_class_, true);
    case ExplainerFamily::concepts: return ConceptVector{schema_.labels(input.label, true)};
  }
  throw ConfigError("unknown explainer family");
}

Explanation ReferenceSet::truth(ExplainerFamily family, const LabeledExample& input) const {
  switch (family) {
    case ExplainerFamily::heatmap:
      if (input.mask.size() == 0) throw PreconditionError("input carries no shape mask");
      return Heatmap{input.mask.cast<double>()};
    case ExplainerFamily::influence: return point_reference(input.label, input.artifact);
    case ExplainerFamily::concepts:
      return ConceptVector{schema_.labels(input.label, input.artifact)};
  }
  throw ConfigError("unknown explainer family");
}

double ReferenceSet::similarity(const Explanation& e, const Explanation& reference) const {
  if (e.index() != reference.index()) throw ShapeError("explanation and reference differ in kind");
  if (const auto* h = std::get_if<Heatmap>(&e)) {
    return ssim(h->values, std::get<Heatmap>(reference).values);
  }
  if (const auto* s = std::get_if<InfluenceSet>(&e)) {
    const auto& ref = std::get<InfluenceSet>(reference);
    return bhattacharyya(class_distribution(*s, classes_), class_distribution(ref, classes_)) *
           bhattacharyya(artifact_distribution(*s), artifact_distribution(ref));
  }
  return neg_l2(std::get<ConceptVector>(e).values, std::get<ConceptVector>(reference).values);
}

std::string similarity_name(ExplainerFamily family) {
  switch (family) {
    case ExplainerFamily::heatmap: return "ssim";
    case ExplainerFamily::influence: return "bhattacharyya";
    case ExplainerFamily::concepts: return "neg_l2";
  }
  return "?";
}

BaselineReport baseline_metrics(std::span<const Explanation> spurious_arm,
                                std::span<const Explanation> clean_arm,
                                std::span<const LabeledExample> inputs,
                                const ReferenceSet& references) {
  if (spurious_arm.size() != inputs.size() || clean_arm.size() != inputs.size()) {
    throw ShapeError("one explanation per input and arm required");
  }
  if (inputs.empty()) throw PreconditionError("baseline evaluation set is empty");
  BaselineReport r;
  r.family = family_of(spurious_arm.front());
  r.similarity = similarity_name(r.family);
  double kssd = 0.0, ccm = 0.0, fam = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const LabeledExample& x = inputs[i];
    if (x.artifact) {
      kssd += references.similarity(spurious_arm[i], references.spurious(r.family, x));
      ++r.n_kssd;
    } else {
      ccm += references.similarity(spurious_arm[i], references.truth(r.family, x));
      ++r.n_ccm;
    }
    if (x.subclass == Subclass::ns_a) {
      fam += references.similarity(clean_arm[i], references.spurious(r.family, x));
      ++r.n_fam;
    }
  }
  if (r.n_kssd == 0) throw PreconditionError("no artifact-bearing inputs for KSSD");
  if (r.n_ccm == 0) throw PreconditionError("no artifact-free inputs for CCM");
  if (r.n_fam == 0) throw PreconditionError("no non-spurious-class artifact inputs for FAM");
  r.kssd = kssd / static_cast<double>(r.n_kssd);
  r.ccm = ccm / static_cast<double>(r.n_ccm);
  r.fam = fam / static_cast<double>(r.n_fam);
  return r;
}

namespace {

struct RefLess {
  bool operator()(const ModelRef& a, const ModelRef& b) const {
    return std::pair(a.arm, a.seed) < std::pair(b.arm, b.seed);
  }
};

}  // namespace

BaselineReport evaluate_baselines(const Explainer& explainer, const ModelPool& models,
                                  std::span<const LabeledExample> inputs,
                                  const ReferenceSet& references, int runs, std::uint64_t seed,
                                  std::size_t jobs) {
  if (runs < 1) throw ConfigError("baselines need at least one run");
  if (models.spurious.empty() || models.clean.empty()) {
    throw PreconditionError("each arm needs at least one model");
  }
  BaselineReport total;
  for (int run = 0; run < runs; ++run) {
    const std::uint64_t s = run_seed(seed, run, 3);
    std::mt19937_64 rng(s);
    std::map<ModelRef, std::vector<std::size_t>, RefLess> groups[2];
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (Arm arm : {Arm::spurious, Arm::clean}) {
        const auto& pool = models.arm(arm);
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        groups[static_cast<int>(arm)][pool[pick(rng)]].push_back(i);
      }
    }
    std::vector<std::optional<Explanation>> out[2];
    out[0].resize(inputs.size());
    out[1].resize(inputs.size());
    std::vector<std::pair<ModelRef, const std::vector<std::size_t>*>> work;
    for (auto& g : groups) {
      for (const auto& [ref, items] : g) work.emplace_back(ref, &items);
    }
    parallel_for(work.size(), jobs, [&](std::size_t w) {
      const auto& [ref, items] = work[w];
      std::vector<const LabeledExample*> ptrs;
      std::vector<std::uint64_t> streams;
      for (std::size_t i : *items) {
        ptrs.push_back(&inputs[i]);
        streams.push_back(mix_seed(s, i));
      }
      auto expl = explainer.explain(ref, ptrs, streams);
      for (std::size_t j = 0; j < items->size(); ++j) {
        out[static_cast<int>(ref.arm)][(*items)[j]] = std::move(expl[j]);
      }
    });
    std::vector<Explanation> spurious, clean;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      spurious.push_back(std::move(*out[static_cast<int>(Arm::spurious)][i]));
      clean.push_back(std::move(*out[static_cast<int>(Arm::clean)][i]));
    }
    const BaselineReport r = baseline_metrics(spurious, clean, inputs, references);
    total.family = r.family;
    total.similarity = r.similarity;
    total.n_kssd = r.n_kssd;
    total.n_ccm = r.n_ccm;
    total.n_fam = r.n_fam;
    total.kssd_runs.push_back(r.kssd);
    total.ccm_runs.push_back(r.ccm);
    total.fam_runs.push_back(r.fam);
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  total.kssd = mean(total.kssd_runs);
  total.ccm = mean(total.ccm_runs);
  total.fam = mean(total.fam_runs);
  return total;
}

nlohmann::json to_json(const BaselineReport& r) {
  return {{"family", to_string(r.family)},
          {"similarity", r.similarity},
          {"definitions", "operational"},
          {"kssd", r.kssd},
          {"ccm", r.ccm},
          {"fam", r.fam},
          {"kssd_per_run", r.kssd_runs},
          {"ccm_per_run", r.ccm_runs},
          {"fam_per_run", r.fam_runs},
          {"n_kssd", r.n_kssd},
          {"n_ccm", r.n_ccm},
          {"n_fam", r.n_fam}};
}

BaselineReport baseline_report_from_json(const nlohmann::json& j) {
  BaselineReport r;
  r.family = family_from_string(j.at("family").get<std::string>());
  r.similarity = j.at("similarity").get<std::string>();
  r.kssd = j.at("kssd").get<double>();
  r.ccm = j.at("ccm").get<double>();
  r.fam = j.at("fam").get<double>();
  r.kssd_runs = j.at("kssd_per_run").get<std::vector<double>>();
  r.ccm_runs = j.at("ccm_per_run").get<std::vector<double>>();
  r.fam_runs = j.at("fam_per_run").get<std::vector<double>>();
  r.n_kssd = j.at("n_kssd").get<std::size_t>();
  r.n_ccm = j.at("n_ccm").get<std::size_t>();
  r.n_fam = j.at("n_fam").get<std::size_t>();
  return r;
}

}  // namespace eds
