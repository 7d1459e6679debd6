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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "eds/core/eds.hpp"

namespace eds {

struct SsimConfig {
  Index window = 8;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Gaussian-windowed structural similarity averaged over every valid window
// position. The dynamic range is the span of both inputs together.
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConfig& config = {});

// sum_i sqrt(p_i q_i); both inputs must be distributions.
double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// -(1/c) sum_i (a_i - b_i)^2.
double neg_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Class-label and artifact-presence distributions over the members of a set.
Eigen::VectorXd class_distribution(const InfluenceSet& s, int classes);
Eigen::VectorXd artifact_distribution(const InfluenceSet& s);

// What an explanation of an input would look like if it pointed at the
// artifact (spurious reference) or at the true cause (true reference).
class ReferenceSet {
 public:
  explicit ReferenceSet(const TaskConfig& task);

  Explanation spurious(ExplainerFamily family, const LabeledExample& input) const;
  Explanation truth(ExplainerFamily family, const LabeledExample& input) const;
  // Family similarity: SSIM, joint Bhattacharyya coefficient or neg_l2.
  double similarity(const Explanation& e, const Explanation& reference) const;

 private:
  Mask region_;
  ConceptSchema schema_;
  int spurious_class_;
  int classes_;
};

struct BaselineReport {
  ExplainerFamily family = ExplainerFamily::heatmap;
  std::string similarity;  // "ssim", "bhattacharyya" or "neg_l2"
  double kssd = 0.0;
  double ccm = 0.0;
  double fam = 0.0;
  std::size_t n_kssd = 0, n_ccm = 0, n_fam = 0;
  std::vector<double> kssd_runs, ccm_runs, fam_runs;

  bool operator==(const BaselineReport&) const = default;
};

std::string similarity_name(ExplainerFamily family);

// KSSD: spurious-arm explanations vs the spurious reference on
// artifact-bearing inputs. CCM: spurious-arm explanations vs the true
// reference on artifact-free inputs. FAM: clean-arm explanations vs the
// spurious reference on non-spurious-class artifact-bearing inputs.
// `spurious_arm[i]` and `clean_arm[i]` explain `inputs[i]`.
BaselineReport baseline_metrics(std::span<const Explanation> spurious_arm,
                                std::span<const Explanation> clean_arm,
                                std::span<const LabeledExample> inputs,
                                const ReferenceSet& references);

// Explains every input once with a seeded spurious and clean model from the
// pool and scores the result. Repeated per run seed and averaged.
BaselineReport evaluate_baselines(const Explainer& explainer, const ModelPool& models,
                                  std::span<const LabeledExample> inputs,
                                  const ReferenceSet& references, int runs, std::uint64_t seed,
                                  std::size_t jobs = 1);

nlohmann::json to_json(const BaselineReport& r);
BaselineReport baseline_report_from_json(const nlohmann::json& j);

}  // namespace eds
