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

#include <gtest/gtest.h>

#include <cmath>

#include "eds/baselines/baselines.hpp"
#include "eds/errors.hpp"
#include "eds/explainers/synthetic.hpp"
#include "eds/zoo/zoo.hpp"

using namespace eds;

namespace {

ModelPool pool(std::uint64_t base, std::size_t per_arm) {
  ModelPool p;
  for (std::size_t i = 0; i < per_arm; ++i) {
    p.spurious.push_back({Arm::spurious, base + i});
    p.clean.push_back({Arm::clean, base + 100 + i});
  }
  return p;
}

TaskConfig stripe_task() {
  TaskConfig t;
  t.classes = {ShapeKind::ellipse, ShapeKind::heart};
  t.per_class = 1000;
  t.spurious_class = 1;
  t.artifact = ArtifactSpec::stripe();
  return t;
}

BaselineReport ideal_report(ExplainerFamily family) {
  const TaskConfig t = stripe_task();
  const auto bundle = build_dataset(t);
  auto ctx = std::make_shared<const SyntheticContext>(t, bundle.discriminator_train, 8);
  const SyntheticExplainer ex(SyntheticExplainerSpec::make(family, Fidelity::ideal), ctx, EncodingConfig{});
  return evaluate_baselines(ex, pool(1, 6), bundle.validation, ReferenceSet(t), 2, 11);
}

}  // namespace

TEST(Ssim, IdentityIsOne) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(16, 16);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, ConstantShiftSingleWindow) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(8, 8, 1.0);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Constant(8, 8, 2.0);
  // range 1: c1 = 1e-4, no variance, so only the luminance term remains.
  const double expected = (2.0 * 1.0 * 2.0 + 1e-4) / (1.0 + 4.0 + 1e-4);
  EXPECT_NEAR(ssim(a, b), expected, 1e-12);
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, NegatedZeroMeanIsNegative) {
  Eigen::MatrixXd a(8, 8);
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 8; ++j) a(i, j) = (i + j) % 2 == 0 ? 1.0 : -1.0;
  }
  // Symmetric window weights cancel the checkerboard mean; variance is 1, range 2.
  const double c2 = (0.03 * 2.0) * (0.03 * 2.0);
  const double expected = (-2.0 + c2) / (2.0 + c2);
  EXPECT_NEAR(ssim(a, -a), expected, 1e-12);
  EXPECT_LT(ssim(a, -a), 0.0);
}

TEST(Ssim, GeometryMismatchThrows) {
  EXPECT_THROW(ssim(Eigen::MatrixXd::Zero(8, 8), Eigen::MatrixXd::Zero(8, 9)), ShapeError);
}

TEST(Bhattacharyya, Cases) {
  const Eigen::Vector2d half(0.5, 0.5), skew(0.1, 0.9);
  EXPECT_NEAR(bhattacharyya(half, half), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(bhattacharyya(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), 0.0);
  double oracle = 0.0;
  for (int i = 0; i < 2; ++i) oracle += std::sqrt(half[i] * skew[i]);
  EXPECT_NEAR(bhattacharyya(half, skew), oracle, 1e-15);
  EXPECT_NEAR(oracle, std::sqrt(0.05) + std::sqrt(0.45), 1e-15);
  EXPECT_THROW(bhattacharyya(Eigen::Vector2d(0.5, 0.6), half), DomainError);
  EXPECT_THROW(bhattacharyya(Eigen::Vector2d(-0.5, 1.5), half), DomainError);
}

TEST(NegL2, Cases) {
  const Eigen::Vector2d a(1, 0), b(1, 1);
  EXPECT_DOUBLE_EQ(neg_l2(a, a), 0.0);
  EXPECT_DOUBLE_EQ(neg_l2(a, b), -0.5);
  EXPECT_DOUBLE_EQ(neg_l2(Eigen::Vector4d::Zero(), Eigen::Vector4d::Ones()), -1.0);
  EXPECT_THROW(neg_l2(a, Eigen::Vector3d::Zero()), ShapeError);
}

TEST(Influence, JointCoefficientIsProduct) {
  TaskConfig t = stripe_task();
  const ReferenceSet refs(t);
  InfluenceSet s;
  s.references = {{0, 1.0, 1, true}, {1, 0.5, 0, true}, {2, 0.2, 1, false}, {3, 0.1, 1, true}};
  InfluenceSet r;
  r.references = {{0, 1.0, 1, true}};
  const double expected = std::sqrt(0.75) * std::sqrt(0.75);
  EXPECT_NEAR(refs.similarity(s, r), expected, 1e-12);
}

TEST(Metrics, IdealInfluenceCells) {
  const auto r = ideal_report(ExplainerFamily::influence);
  EXPECT_EQ(r.similarity, "bhattacharyya");
  EXPECT_NEAR(r.kssd, 1.0, 0.01);
  EXPECT_NEAR(r.ccm, 0.5, 0.01);
  EXPECT_NEAR(r.fam, 0.0, 0.01);
}

TEST(Metrics, IdealConceptCells) {
  const auto r = ideal_report(ExplainerFamily::concepts);
  EXPECT_EQ(r.similarity, "neg_l2");
  EXPECT_NEAR(r.kssd, 0.0, 0.01);
  EXPECT_NEAR(r.ccm, 0.0, 0.01);
  EXPECT_NEAR(r.fam, -0.5, 0.01);
}

TEST(Metrics, IdealHeatmapKssdAndRanges) {
  const auto r = ideal_report(ExplainerFamily::heatmap);
  EXPECT_EQ(r.similarity, "ssim");
  EXPECT_NEAR(r.kssd, 1.0, 0.01);
  for (double v : {r.kssd, r.ccm, r.fam}) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(r.kssd_runs.size(), 2u);
  EXPECT_EQ(baseline_report_from_json(to_json(r)), r);
}

TEST(Metrics, EmptySubsetIsNamed) {
  const TaskConfig t = stripe_task();
  const ReferenceSet refs(t);
  LabeledExample x;
  x.image = Image({64, 64, 1});
  x.mask = Mask::Zero(64, 64);
  x.label = 0;
  x.artifact = false;
  retag(x, 1);
  const std::vector<LabeledExample> inputs{x};
  const std::vector<Explanation> e{ConceptVector{Eigen::Vector2d(1, 0)}};
  try {
    baseline_metrics(e, e, inputs, refs);
    FAIL() << "expected an error";
  } catch (const PreconditionError& err) {
    EXPECT_NE(std::string(err.what()).find("KSSD"), std::string::npos);
  }
}
