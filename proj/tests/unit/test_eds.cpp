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
#include <map>
#include <random>

#include "eds/core/eds.hpp"
#include "eds/errors.hpp"
#include "eds/explainers/synthetic.hpp"
#include "eds/zoo/zoo.hpp"

using namespace eds;

namespace {

// Emits the same concept vector for every model. Inputs whose stream falls
// below `failures` (mod 1000) throw.
class ConstantExplainer final : public Explainer {
 public:
  explicit ConstantExplainer(std::size_t failures = 0) : failures_(failures) {}
  std::string id() const override { return "constant"; }
  ExplainerFamily family() const override { return ExplainerFamily::concepts; }
  EncodingShape shape() const override { return {{1, 2, 1}, false}; }
  std::vector<Explanation> explain(const ModelRef&, std::span<const LabeledExample* const> inputs,
                                   std::span<const std::uint64_t> streams) const override {
    std::vector<Explanation> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (streams[i] % 1000 < failures_) throw std::runtime_error("explainer failure");
      out.push_back(ConceptVector{(Eigen::VectorXd(2) << 0.25, 0.75).finished()});
    }
    return out;
  }
  Eigen::VectorXd encode(const Explanation& e) const override {
    return std::get<ConceptVector>(e).values;
  }

 private:
  std::size_t failures_;
};

std::vector<LabeledExample> balanced_partition(std::size_t n) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample e;
    e.image = Image({4, 4, 1});
    e.mask = Mask::Ones(4, 4);
    e.label = static_cast<int>(i % 2);
    e.artifact = (i / 2) % 2 == 1;
    retag(e, 1);
    out.push_back(std::move(e));
  }
  return out;
}

ModelPool pool(std::uint64_t base, std::size_t per_arm) {
  ModelPool p;
  for (std::size_t i = 0; i < per_arm; ++i) {
    p.spurious.push_back({Arm::spurious, base + i});
    p.clean.push_back({Arm::clean, base + 100 + i});
  }
  return p;
}

DiscriminatorDataset scalar_dataset(const std::vector<float>& clean, const std::vector<float>& spurious) {
  DiscriminatorDataset d;
  d.shape = {{1, 1, 1}, false};
  d.features.resize(static_cast<Index>(clean.size() + spurious.size()), 1);
  Index r = 0;
  for (float v : clean) {
    d.features(r++, 0) = v;
    d.arms.push_back(0);
    d.subclasses.push_back(Subclass::ns_na);
    d.sources.push_back({Arm::clean, 1});
  }
  for (float v : spurious) {
    d.features(r++, 0) = v;
    d.arms.push_back(1);
    d.subclasses.push_back(Subclass::s_a);
    d.sources.push_back({Arm::spurious, 2});
  }
  return d;
}

double js_bernoulli_bits(double p, double q) {
  double js = 0.0;
  const double P[2] = {p, 1 - p}, Q[2] = {q, 1 - q};
  for (int i = 0; i < 2; ++i) {
    const double m = 0.5 * (P[i] + Q[i]);
    if (P[i] > 0) js += 0.5 * P[i] * std::log2(P[i] / m);
    if (Q[i] > 0) js += 0.5 * Q[i] * std::log2(Q[i] / m);
  }
  return js;
}

}  // namespace

TEST(Draws, BalancedAndDeterministic) {
  const auto part = balanced_partition(140);
  const auto models = pool(1, 3);
  const auto draws = draw_assignments(part, models, 9);
  ASSERT_EQ(draws.size(), 140u);
  std::map<Subclass, std::array<int, 2>> per;
  int spurious = 0;
  for (const auto& d : draws) {
    const bool s = d.model.arm == Arm::spurious;
    spurious += s;
    per[part[d.input].subclass][s]++;
    const auto& arm = models.arm(d.model.arm);
    EXPECT_NE(std::find(arm.begin(), arm.end(), d.model), arm.end());
  }
  EXPECT_LE(std::abs(spurious - 70), 1);
  for (const auto& [sub, c] : per) EXPECT_LE(std::abs(c[0] - c[1]), 1);
  const auto again = draw_assignments(part, models, 9);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    EXPECT_EQ(draws[i].model, again[i].model);
    EXPECT_EQ(draws[i].stream, again[i].stream);
  }
}

TEST(Draws, EmptyArmIsRejected) {
  ModelPool p = pool(1, 2);
  p.clean.clear();
  EXPECT_ANY_THROW(draw_assignments(balanced_partition(10), p, 1));
}

TEST(Dataset, BuildsFromExplainerAndRoundTrips) {
  TaskConfig t;
  t.classes = {ShapeKind::ellipse, ShapeKind::heart};
  t.per_class = 500;
  t.spurious_class = 1;
  t.artifact = ArtifactSpec::stripe();
  const auto bundle = build_dataset(t);
  const auto refs = arm_view(bundle, Arm::clean, ZooConfig{});
  auto ctx = std::make_shared<const SyntheticContext>(t, refs, 8);
  EncodingConfig enc;
  const SyntheticExplainer ex(SyntheticExplainerSpec::make(ExplainerFamily::influence, Fidelity::noisy), ctx, enc);
  const auto models = pool(10, 4);
  const auto d = make_discriminator_dataset(models, bundle.discriminator_train, ex, 3);
  EXPECT_EQ(d.size(), 140u);
  const auto counts = d.arm_counts();
  EXPECT_LE(std::abs(static_cast<int>(counts[0]) - static_cast<int>(counts[1])), 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.arms[i], d.sources[i].arm == Arm::spurious ? 1 : 0);
    EXPECT_EQ(d.references[i].size(), 8u);
  }
  const auto again = make_discriminator_dataset(models, bundle.discriminator_train, ex, 3, 4);
  EXPECT_EQ(again.features, d.features);

  const auto records = to_records(d, ex.id());
  const auto back = from_records(records, d.shape);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.arms, d.arms);
  EXPECT_EQ(back.subclasses, d.subclasses);
  EXPECT_EQ(back.references, d.references);
}

TEST(Dataset, SkipsUpToOnePercent) {
  const auto part = balanced_partition(2000);
  // Streams are well mixed, so failing streams % 1000 < k fails ~k/1000.
  const auto ok = make_discriminator_dataset(pool(1, 2), part, ConstantExplainer(5), 4);
  EXPECT_GT(ok.skipped, 0u);
  EXPECT_EQ(ok.size() + ok.skipped, 2000u);
  EXPECT_THROW(make_discriminator_dataset(pool(1, 2), part, ConstantExplainer(50), 4), DatasetError);
}

TEST(Discriminator, SeparableArms) {
  const DiscriminatorDataset d = scalar_dataset(std::vector<float>(200, 0.0f), std::vector<float>(200, 1.0f));
  DiscriminatorSpec spec{d.shape};
  spec.train.seed = 1;
  const auto disc = train_discriminator(d, spec);
  const auto r = evaluate_discriminator(disc, d);
  EXPECT_DOUBLE_EQ(r.overall, 1.0);
  EXPECT_EQ(train_discriminator(d, spec).parameters, disc.parameters);
  // The loss keeps falling toward 0 with more optimisation.
  DiscriminatorSpec longer = spec;
  longer.train.epochs = 60;
  const double tail = train_discriminator(d, longer).train_loss_bits;
  EXPECT_LT(tail, disc.train_loss_bits);
  EXPECT_LT(tail, 0.05);
}

TEST(Discriminator, IdenticalArmsCostOneBit) {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> a(2000), b(2000);
  for (auto& v : a) v = n(rng);
  for (auto& v : b) v = n(rng);
  const auto d = scalar_dataset(a, b);
  DiscriminatorSpec spec{d.shape};
  spec.train.seed = 3;
  EXPECT_NEAR(train_discriminator(d, spec).train_loss_bits, 1.0, 0.02);
}

TEST(Discriminator, IndistinguishableExplanationsScoreOneHalf) {
  const auto train = balanced_partition(1400), val = balanced_partition(600);
  const ConstantExplainer ex;
  const auto dt = make_discriminator_dataset(pool(1, 1), train, ex, 5);
  const auto dv = make_discriminator_dataset(pool(50, 1), val, ex, 6);
  TrainConfig cfg = DiscriminatorSpec::default_train();
  cfg.seed = 7;
  const auto r = eds_run(dt, dv, cfg);
  EXPECT_NEAR(r.overall, 0.5, 1.0 / std::sqrt(600.0));
}

TEST(Discriminator, ConstantPredictorAndSubclassConsistency) {
  DiscriminatorDataset d = scalar_dataset(std::vector<float>(301, 0.0f), std::vector<float>(300, 1.0f));
  for (std::size_t i = 0; i < d.size(); ++i) d.subclasses[i] = static_cast<Subclass>(i % 4);
  Discriminator disc;
  disc.spec = DiscriminatorSpec{d.shape}.model();
  disc.parameters = zero_parameters(disc.spec);
  disc.parameters.back()[0] = 3.0;  // always spurious
  const auto r = evaluate_discriminator(disc, d);
  EXPECT_NEAR(r.overall, 0.5, 1.0 / std::sqrt(601.0));
  double weighted = 0.0;
  std::size_t total = 0;
  for (int s = 0; s < 4; ++s) {
    weighted += r.subclass[static_cast<std::size_t>(s)] * static_cast<double>(r.counts[static_cast<std::size_t>(s)]);
    total += r.counts[static_cast<std::size_t>(s)];
  }
  EXPECT_EQ(total, 601u);
  EXPECT_NEAR(weighted / static_cast<double>(total), r.overall, 1e-15);
}

TEST(Divergence, BernoulliOracleBySummation) {
  EXPECT_NEAR(js_bernoulli_bits(0.1, 0.9), 0.531, 0.001);
  EXPECT_DOUBLE_EQ(js_bernoulli_bits(0.3, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(js_bernoulli_bits(0.0, 1.0), 1.0);
}

TEST(Divergence, IdenticalAndDisjointSamples) {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 1.0f);
  RowMatrixXf a(3000, 1), b(3000, 1);
  for (Index i = 0; i < 3000; ++i) {
    a(i, 0) = n(rng);
    b(i, 0) = n(rng);
  }
  DiscriminatorSpec spec{{{1, 1, 1}, false}};
  EXPECT_LE(estimate_js_divergence(a, b, spec, 1).js_estimate_bits, 0.05);
  const RowMatrixXf zeros = RowMatrixXf::Zero(3000, 1), ones = RowMatrixXf::Ones(3000, 1);
  EXPECT_GE(estimate_js_divergence(zeros, ones, spec, 1).js_estimate_bits, 0.95);
}

TEST(Divergence, LossDecompositionClamps) {
  EXPECT_DOUBLE_EQ(LossDecomposition::from_loss(1.3).js_estimate_bits, 0.0);
  EXPECT_DOUBLE_EQ(LossDecomposition::from_loss(0.25).js_estimate_bits, 0.75);
  EXPECT_DOUBLE_EQ(LossDecomposition::from_loss(0.0).js_estimate_bits, 1.0);
  EXPECT_NEAR(LossDecomposition::from_loss(0.5).kl_slack(0.6), 0.1, 1e-12);
}

TEST(Aggregate, TwoRuns) {
  const std::vector<double> v = {0.6, 0.8};
  const auto s = summarize(v);
  EXPECT_NEAR(s.mean, 0.7, 1e-12);
  EXPECT_NEAR(s.std, 0.1 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.ci95, 1.96 * s.std / std::sqrt(2.0), 1e-12);
  const std::vector<double> same = {0.5, 0.5, 0.5};
  EXPECT_EQ(summarize(same).ci95, 0.0);
  const std::vector<double> one = {0.5};
  EXPECT_THROW(summarize(one), AggregationError);
}

TEST(Aggregate, ReportJsonRoundTrip) {
  std::vector<RunResult> runs(3);
  for (int r = 0; r < 3; ++r) {
    runs[static_cast<std::size_t>(r)].overall = 0.7 + 0.01 * r;
    runs[static_cast<std::size_t>(r)].subclass = {0.5, 0.5, 0.9 + 0.01 * r, 1.0};
    runs[static_cast<std::size_t>(r)].loss = LossDecomposition::from_loss(0.6 + 0.01 * r);
  }
  EDSReport rep = aggregate_runs(runs);
  rep.explainer = "x";
  rep.artifact = "stripe";
  rep.dataset = "dsprites";
  EXPECT_EQ(rep.runs, 3);
  EXPECT_NEAR(rep.overall.mean, 0.71, 1e-12);
  EXPECT_NEAR(rep.loss_bits, 0.61, 1e-12);
  const auto j = to_json(rep);
  for (const char* key : {"overall", "s_na", "ns_na", "s_a", "ns_a"}) {
    EXPECT_TRUE(j.at(key).contains("mean"));
    EXPECT_TRUE(j.at(key).contains("ci95"));
  }
  EXPECT_EQ(eds_report_from_json(j), rep);
}

TEST(Evaluate, LeakageIsFatal) {
  ModelPool a = pool(1, 2), b = pool(30, 2);
  EXPECT_NO_THROW(check_disjoint(a, b));
  b.clean.push_back(a.clean.front());
  EXPECT_THROW(check_disjoint(a, b), LeakageError);
  const auto part = balanced_partition(40), other = balanced_partition(40);
  EdsConfig cfg;
  cfg.runs = 2;
  EXPECT_THROW(evaluate_eds(ConstantExplainer(), a, b, part, other, cfg), LeakageError);
  EXPECT_ANY_THROW(evaluate_eds(ConstantExplainer(), a, pool(30, 2), part, part, cfg));
}

TEST(Evaluate, IdealConceptProtocolSmall) {
  TaskConfig t;
  t.classes = {ShapeKind::ellipse, ShapeKind::heart};
  t.per_class = 2000;
  t.spurious_class = 1;
  t.artifact = ArtifactSpec::stripe();
  const auto bundle = build_dataset(t);
  auto ctx = std::make_shared<const SyntheticContext>(t, bundle.discriminator_train, 8);
  const SyntheticExplainer ex(SyntheticExplainerSpec::make(ExplainerFamily::concepts, Fidelity::ideal), ctx, EncodingConfig{});
  EdsConfig cfg;
  cfg.runs = 2;
  cfg.seed = 5;
  const auto rep = evaluate_eds(ex, pool(1, 14), pool(500, 6), bundle.discriminator_train, bundle.validation, cfg);
  EXPECT_EQ(rep.runs, 2);
  EXPECT_NEAR(rep.overall.mean, 0.75, 0.04);
  EXPECT_NEAR(rep.s_na.mean, 0.5, 0.08);
  EXPECT_NEAR(rep.ns_na.mean, 0.5, 0.08);
  EXPECT_GE(rep.s_a.mean, 0.97);
  EXPECT_GE(rep.ns_a.mean, 0.97);
}
