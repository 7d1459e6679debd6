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
#include <numbers>
#include <random>

#include "eds/errors.hpp"
#include "eds/explainers/attribution.hpp"
#include "eds/explainers/explainer.hpp"
#include "eds/explainers/synthetic.hpp"
#include "eds/zoo/zoo.hpp"

using namespace eds;

namespace {

ModelSpec dense_spec(Index h, Index w, int classes) {
  ModelSpec s;
  s.input = {h, w, 1};
  s.classes = classes;
  s.layers = {LayerSpec::dense(classes)};
  return s;
}

Parameters random_parameters(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Parameters p = zero_parameters(spec);
  for (auto& t : p)
    for (Index i = 0; i < t.size(); ++i) t[i] = n(rng);
  return p;
}

Tensor batch_of(const Image& img) {
  const Geometry g = img.geometry;
  return to_tensor(img).reshaped({1, g.height, g.width, g.channels});
}

LabeledExample toy_example(double a, double b, int label) {
  LabeledExample e;
  e.image = Image({1, 2, 1});
  e.image.pixels << static_cast<float>(a), static_cast<float>(b);
  e.label = label;
  e.mask = Mask::Ones(1, 2);
  return e;
}

// Closed-form final-dense gradient inner product for a single softmax dense
// layer with loss in bits: ((p - y).(p' - y')) (x.x' + 1) / ln(2)^2.
double logistic_score(const ModelSpec& spec, const Parameters& p, const LabeledExample& a,
                      int label_a, const LabeledExample& b, int label_b) {
  auto residual = [&](const LabeledExample& e, int label) {
    Eigen::VectorXd r = probabilities(spec, p, batch_of(e.image)).row(0).transpose();
    r[label] -= 1.0;
    return r;
  };
  const double xx = a.image.pixels.cast<double>().dot(b.image.pixels.cast<double>()) + 1.0;
  return residual(a, label_a).dot(residual(b, label_b)) * xx / (std::numbers::ln2 * std::numbers::ln2);
}

struct SyntheticFixture : ::testing::Test {
  static void SetUpTestSuite() {
    TaskConfig t;
    t.classes = {ShapeKind::ellipse, ShapeKind::heart};
    t.per_class = 300;
    t.spurious_class = 1;
    t.artifact = ArtifactSpec::stripe();
    t.seed = 8;
    bundle = new DatasetBundle(build_dataset(t));
    ZooConfig z;
    pool = new std::vector<LabeledExample>(arm_view(*bundle, Arm::clean, z));
    context = std::make_shared<const SyntheticContext>(t, *pool, 8);
  }
  static void TearDownTestSuite() {
    context.reset();
    delete pool;
    delete bundle;
  }

  static const LabeledExample& find(Subclass s) {
    for (const auto& e : bundle->discriminator_train)
      if (e.subclass == s) return e;
    throw std::runtime_error("subclass missing");
  }

  static Explanation explain(ExplainerFamily f, Fidelity q, const LabeledExample& e, Arm arm,
                             std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    return synthetic_explain(SyntheticExplainerSpec::make(f, q), e, arm, *context, rng);
  }

  static inline DatasetBundle* bundle = nullptr;
  static inline std::vector<LabeledExample>* pool = nullptr;
  static inline std::shared_ptr<const SyntheticContext> context;
};

}  // namespace

TEST(IntegratedGradients, LinearModelIsExact) {
  const ModelSpec s = dense_spec(3, 4, 2);
  const Parameters p = random_parameters(s, 1);
  Image img({3, 4, 1});
  for (Index i = 0; i < 12; ++i) img.pixels[i] = static_cast<float>(0.1 * i);
  for (int m : {1, 7, 128}) {
    const auto a = integrated_gradients(s, p, img, m);
    for (Index r = 0; r < 3; ++r) {
      for (Index c = 0; c < 4; ++c) {
        const Index i = r * 4 + c;
        EXPECT_NEAR(a.heatmap.values(r, c), p[0][i * 2 + a.target] * img.pixels[i], 1e-9);
      }
    }
    EXPECT_NEAR(a.total, a.output_delta, 1e-9);
  }
}

TEST(IntegratedGradients, ConstantModelGivesZeros) {
  const ModelSpec s = dense_spec(3, 3, 2);
  Parameters p = zero_parameters(s);
  p[1][1] = 2.0;
  Image img({3, 3, 1});
  img.pixels.setConstant(0.7f);
  const auto a = integrated_gradients(s, p, img, 16);
  EXPECT_EQ(a.target, 1);
  EXPECT_EQ(a.heatmap.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(IntegratedGradients, ProductFunctionPathIntegral) {
  const GradientField grad = [](const RowMatrixXd& pts) {
    RowMatrixXd g(pts.rows(), 2);
    g.col(0) = pts.col(1);
    g.col(1) = pts.col(0);
    return g;
  };
  Eigen::VectorXd x(2);
  x << 0.8, -1.5;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const auto a = path_integrated_gradients(grad, x, zero, 1024);
  const double half = x[0] * x[1] / 2.0;
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(a[i], half, 0.01 * std::abs(half));
    // Right Riemann sum: x1 x2 (m + 1) / (2m).
    EXPECT_NEAR(a[i], x[0] * x[1] * 1025.0 / 2048.0, 1e-12);
  }
}

TEST(IntegratedGradients, NonFiniteGradientNamesStep) {
  const GradientField grad = [](const RowMatrixXd& pts) {
    RowMatrixXd g = RowMatrixXd::Ones(pts.rows(), pts.cols());
    for (Index r = 0; r < pts.rows(); ++r)
      if (pts(r, 0) > 0.49 && pts(r, 0) < 0.51) g(r, 0) = std::nan("");
    return g;
  };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  try {
    path_integrated_gradients(grad, x, Eigen::VectorXd::Zero(2), 10);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 5"), std::string::npos) << e.what();
  }
}

TEST(IntegratedGradients, StepConvergenceOnTrainedConvModel) {
  TaskConfig t;
  t.classes = {ShapeKind::ellipse, ShapeKind::heart};
  t.per_class = 100;
  t.seed = 2;
  const auto bundle = build_dataset(t);
  const ModelSpec spec = ModelSpec::task_default(bundle.geometry(), 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 4;
  const auto trained =
      train(spec, image_inputs(bundle.model_train), class_labels(bundle.model_train), cfg);
  // Mean completeness residual over a fixed probe batch.
  double previous = std::numeric_limits<double>::infinity();
  for (int m : {8, 32, 128, 512}) {
    double err = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      const auto a = integrated_gradients(spec, trained.parameters, bundle.validation[i].image, m);
      err += std::abs(a.total - a.output_delta) / 12.0;
    }
    EXPECT_LE(err, previous + 1e-9) << "m = " << m;
    previous = err;
  }
}

TEST(TracIn, LogisticToyMatchesClosedForm) {
  const ModelSpec s = dense_spec(1, 2, 2);
  std::vector<ModelCheckpoint> ckpts(2);
  ckpts[0].parameters = random_parameters(s, 3);
  ckpts[0].learning_rate = 0.1;
  ckpts[1].parameters = random_parameters(s, 4);
  ckpts[1].learning_rate = 0.05;
  const std::vector<LabeledExample> cands = {toy_example(1.0, 0.5, 0), toy_example(-0.3, 2.0, 1),
                                             toy_example(0.7, -1.2, 1)};
  const LabeledExample q = toy_example(0.4, 0.9, 0);
  const Parameters model = random_parameters(s, 5);
  const int predicted = predict(s, model, batch_of(q.image))[0];

  const TracInIndex index(s, ckpts, cands);
  const Eigen::VectorXd scores = index.scores(to_tensor(q.image), predicted);
  std::size_t best = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    double oracle = 0.0;
    for (const auto& c : ckpts) {
      oracle += c.learning_rate *
                logistic_score(s, c.parameters, cands[j], cands[j].label, q, predicted);
    }
    EXPECT_NEAR(scores[static_cast<Index>(j)], oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
    if (scores[static_cast<Index>(j)] > scores[static_cast<Index>(best)]) best = j;
  }
  const auto set = tracin_influence(s, model, ckpts, cands, q.image, 1);
  ASSERT_EQ(set.references.size(), 1u);
  EXPECT_EQ(set.references[0].index, best);
  EXPECT_EQ(set.references[0].label, cands[best].label);
}

TEST(TracIn, SelfInfluenceAndOrthogonality) {
  const ModelSpec s = dense_spec(1, 2, 2);
  std::vector<ModelCheckpoint> ckpts(1);
  ckpts[0].parameters = random_parameters(s, 6);
  ckpts[0].learning_rate = 0.2;
  const LabeledExample q = toy_example(1.0, 0.0, 1);
  // x.x' + 1 = 0 makes the final-dense gradients orthogonal.
  const std::vector<LabeledExample> cands = {toy_example(-1.0, 0.0, 0), q,
                                             toy_example(-1.0, 0.0, 1)};
  const TracInIndex index(s, ckpts, cands);
  const auto scores = index.scores(to_tensor(q.image), 1);
  EXPECT_NEAR(scores[0], 0.0, 1e-12);
  EXPECT_NEAR(scores[2], 0.0, 1e-12);
  EXPECT_GE(scores[1], 0.0);
  EXPECT_NEAR(scores[1], 0.2 * logistic_score(s, ckpts[0].parameters, q, 1, q, 1), 1e-12);
  EXPECT_EQ(index.top_k(scores, 1).references[0].index, 1u);
}

TEST(TracIn, TiesKeepCandidateOrder) {
  const ModelSpec s = dense_spec(1, 2, 2);
  std::vector<ModelCheckpoint> ckpts(1);
  ckpts[0].parameters = random_parameters(s, 7);
  ckpts[0].learning_rate = 0.1;
  const std::vector<LabeledExample> cands = {toy_example(-1.0, 0.0, 0), toy_example(-1.0, 0.0, 1),
                                             toy_example(-1.0, 0.0, 0)};
  const TracInIndex index(s, ckpts, cands);
  const auto set = index.top_k(index.scores(to_tensor(toy_example(1.0, 0.0, 0).image), 0), 3);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(set.references[r].index, r);
    EXPECT_NEAR(set.references[r].score, 0.0, 1e-12);
  }
}

TEST(TracIn, ScoreIsSymmetric) {
  const ModelSpec s = dense_spec(1, 2, 3);
  std::vector<ModelCheckpoint> ckpts(2);
  ckpts[0].parameters = random_parameters(s, 8);
  ckpts[0].learning_rate = 0.3;
  ckpts[1].parameters = random_parameters(s, 9);
  ckpts[1].learning_rate = 0.1;
  const LabeledExample a = toy_example(0.2, -0.7, 2), b = toy_example(1.1, 0.4, 0);
  const std::vector<LabeledExample> ca = {a}, cb = {b};
  const double ab = TracInIndex(s, ckpts, ca).scores(to_tensor(b.image), b.label)[0];
  const double ba = TracInIndex(s, ckpts, cb).scores(to_tensor(a.image), a.label)[0];
  EXPECT_NEAR(ab, ba, 1e-12);
}

TEST(TracIn, Preconditions) {
  const ModelSpec s = dense_spec(1, 2, 2);
  std::vector<ModelCheckpoint> ckpts(1);
  ckpts[0].parameters = random_parameters(s, 1);
  const std::vector<LabeledExample> none;
  const std::vector<LabeledExample> one = {toy_example(1, 1, 0)};
  EXPECT_THROW(TracInIndex(s, ckpts, none), PreconditionError);
  EXPECT_THROW(TracInIndex(s, {}, one), PreconditionError);
  const TracInIndex index(s, ckpts, one);
  EXPECT_THROW(index.top_k(Eigen::VectorXd::Zero(1), 2), PreconditionError);
}

TEST(Probes, InseparableActivationsGiveOneHalf) {
  const ConceptSchema schema{{"c", "artifact"}, {0, -1}};
  Eigen::MatrixXd acts = Eigen::MatrixXd::Constant(200, 4, 0.3);
  Eigen::MatrixXd labels(200, 2);
  for (Index i = 0; i < 200; ++i) labels(i, 0) = labels(i, 1) = i % 2;
  const auto probes = fit_concept_probes(acts, labels, schema);
  const Eigen::MatrixXd p = probes.predict(acts);
  EXPECT_LE((p.array() - 0.5).abs().maxCoeff(), 0.05);
}

TEST(Probes, LinearlyEncodedConceptIsRecovered) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  auto sample = [&](Index rows, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    x.resize(rows, 5);
    y.resize(rows, 2);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < 5; ++j) x(i, j) = n(rng);
      const bool c0 = i % 2 == 0, c1 = (i / 2) % 2 == 0;
      x(i, 1) += c0 ? 3.0 : -3.0;
      x(i, 3) += c1 ? 3.0 : -3.0;
      y(i, 0) = c0;
      y(i, 1) = c1;
    }
  };
  Eigen::MatrixXd xtr, ytr, xte, yte;
  sample(400, xtr, ytr);
  sample(400, xte, yte);
  const ConceptSchema schema{{"a", "b"}, {0, -1}};
  const auto probes = fit_concept_probes(xtr, ytr, schema);
  const Eigen::MatrixXd p = probes.predict(xte);
  ASSERT_EQ(p.cols(), 2);
  for (Index c = 0; c < 2; ++c) {
    int correct = 0;
    for (Index i = 0; i < p.rows(); ++i) correct += (p(i, c) >= 0.5) == (yte(i, c) == 1.0);
    EXPECT_GE(correct / 400.0, 0.99);
  }
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_LE(p.maxCoeff(), 1.0);
}

TEST(Probes, LogisticFitIsStationary) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(300, 3);
  Eigen::VectorXd y(300);
  for (Index i = 0; i < 300; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = n(rng);
    y[i] = (x(i, 0) - 0.5 * x(i, 2) + n(rng)) > 0 ? 1.0 : 0.0;
  }
  ProbeConfig cfg;
  cfg.l2 = 1e-2;
  const auto probe = fit_logistic(x, y, cfg);
  const Eigen::VectorXd z = (x * probe.weights).array() + probe.bias;
  const Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
  // Gradient of mean log-loss + (l2/2)|w|^2 vanishes at the optimum.
  const Eigen::VectorXd gw = x.transpose() * (p - y) / 300.0 + cfg.l2 * probe.weights;
  EXPECT_LE(gw.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(std::abs((p - y).mean()), 1e-6);
}

TEST(Concepts, SchemaForTask) {
  const std::vector<ShapeKind> two = {ShapeKind::ellipse, ShapeKind::heart};
  const auto s2 = ConceptSchema::for_task(two);
  EXPECT_EQ(s2.size(), 2u);
  EXPECT_EQ(s2.labels(1, false), (Eigen::VectorXd(2) << 1, 0).finished());
  EXPECT_EQ(s2.labels(0, true), (Eigen::VectorXd(2) << 0, 1).finished());
  const std::vector<ShapeKind> three = {ShapeKind::square, ShapeKind::ellipse, ShapeKind::heart};
  const auto s3 = ConceptSchema::for_task(three);
  EXPECT_EQ(s3.size(), 4u);
  EXPECT_EQ(s3.artifact_index(), 3u);
}

TEST(Encoding, ConstantHeatmapIsZero) {
  const Explanation h = Heatmap{Eigen::MatrixXd::Constant(5, 5, 0.4)};
  const Eigen::VectorXd e = encode(h, {});
  EXPECT_EQ(e.size(), 25);
  EXPECT_EQ(e.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encoding, HeatmapIsStandardised) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  const Eigen::VectorXd e = encode(Heatmap{m}, {});
  EXPECT_NEAR(e.mean(), 0.0, 1e-12);
  EXPECT_NEAR(e.squaredNorm() / 4.0, 1.0, 1e-12);
}

TEST(Encoding, InfluenceSummary) {
  InfluenceSet s;
  for (int r = 0; r < 4; ++r) s.references.push_back({static_cast<std::size_t>(r), 4.0 - r, 1, true});
  EncodingConfig cfg;
  cfg.classes = 2;
  const Eigen::VectorXd e = encode(s, cfg);
  ASSERT_EQ(e.size(), 4);
  EXPECT_DOUBLE_EQ(e[0], 0.0);
  EXPECT_DOUBLE_EQ(e[1], 1.0);
  EXPECT_DOUBLE_EQ(e[2], 1.0);
  // Rank weights 1/(r+1) over scores normalised by the largest |score|.
  const double w = 1 + 1 / 2.0 + 1 / 3.0 + 1 / 4.0;
  const double expected = (1.0 + 0.75 / 2 + 0.5 / 3 + 0.25 / 4) / w;
  EXPECT_NEAR(e[3], expected, 1e-12);
  EXPECT_EQ(encoding_shape(ExplainerFamily::influence, {64, 64, 1}, 2, 8, cfg).geometry,
            (Geometry{1, 4, 1}));
}

TEST(Encoding, ImageStack) {
  std::vector<LabeledExample> pool(2);
  for (auto& e : pool) e.image = Image({32, 32, 1});
  pool[1].image.pixels.setOnes();
  EncodingConfig cfg;
  cfg.influence = InfluenceEncoding::image_stack;
  cfg.pool = pool;
  InfluenceSet s;
  s.references = {{1, 1.0, 0, false}, {0, 0.5, 0, false}};
  const Eigen::VectorXd e = encode(s, cfg);
  ASSERT_EQ(e.size(), 16 * 16 * 2);
  // Channels interleaved per pixel: reference 0 then reference 1.
  EXPECT_DOUBLE_EQ(e[0], 1.0);
  EXPECT_DOUBLE_EQ(e[1], 0.0);
}

TEST(Encoding, ConceptPassesThrough) {
  Eigen::VectorXd v(3);
  v << 0.1, 0.9, 0.5;
  EXPECT_EQ(encode(ConceptVector{v}, {}), v);
}

TEST(Encoding, Base64KnownValues) {
  const std::string man = "Man", ma = "Ma";
  EXPECT_EQ(base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(man.data()), 3)), "TWFu");
  EXPECT_EQ(base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(ma.data()), 2)), "TWE=");
  const auto back = base64_decode("TWE=");
  EXPECT_EQ(std::string(back.begin(), back.end()), "Ma");
  EXPECT_ANY_THROW(base64_decode("T!E="));
}

TEST(Encoding, DumpRecordRoundTrip) {
  DumpRecord r;
  r.explainer = "influence-tracin";
  r.model_seed = 12345678901ULL;
  r.arm = Arm::spurious;
  r.subclass = Subclass::ns_a;
  r.encoded = Eigen::VectorXf::LinSpaced(7, -1.0f, 2.0f);
  r.references = {4, 9, 1};
  const auto j = to_json(r);
  EXPECT_EQ(j.at("subclass").get<int>(), 3);
  EXPECT_EQ(dump_record_from_json(j), r);
  r.references.clear();
  EXPECT_FALSE(to_json(r).contains("references"));
}

TEST_F(SyntheticFixture, IdealHeatmapOnSpuriousClassNoArtifact) {
  const auto& e = find(Subclass::s_na);
  const auto h = std::get<Heatmap>(explain(ExplainerFamily::heatmap, Fidelity::ideal, e, Arm::spurious));
  EXPECT_EQ(h.values, context->artifact_region().cast<double>());
  const auto c = std::get<Heatmap>(explain(ExplainerFamily::heatmap, Fidelity::ideal, e, Arm::clean));
  EXPECT_EQ(c.values, e.mask.cast<double>());
  const auto& ns = find(Subclass::ns_na);
  const auto n = std::get<Heatmap>(explain(ExplainerFamily::heatmap, Fidelity::ideal, ns, Arm::spurious));
  EXPECT_EQ(n.values, ns.mask.cast<double>());
}

TEST_F(SyntheticFixture, IdealConceptCleanArmIgnoresArtifact) {
  const auto& e = find(Subclass::s_a);
  const auto v = std::get<ConceptVector>(explain(ExplainerFamily::concepts, Fidelity::ideal, e, Arm::clean));
  EXPECT_EQ(v.values, (Eigen::VectorXd(2) << 1, 0).finished());
}

TEST_F(SyntheticFixture, IdealConceptSubclassSeparability) {
  for (int code = 0; code < 4; ++code) {
    const auto& e = find(static_cast<Subclass>(code));
    const auto s = std::get<ConceptVector>(explain(ExplainerFamily::concepts, Fidelity::ideal, e, Arm::spurious));
    const auto c = std::get<ConceptVector>(explain(ExplainerFamily::concepts, Fidelity::ideal, e, Arm::clean));
    const Eigen::VectorXd diff = s.values - c.values;
    if (e.artifact) {
      EXPECT_EQ(diff.cwiseAbs().sum(), 1.0);
      EXPECT_EQ(diff[static_cast<Index>(context->schema().artifact_index())], 1.0);
    } else {
      EXPECT_EQ(diff.cwiseAbs().sum(), 0.0);
    }
  }
}

TEST_F(SyntheticFixture, IdealInfluenceFollowsBehaviourTable) {
  for (int code = 0; code < 4; ++code) {
    const auto& e = find(static_cast<Subclass>(code));
    for (Arm arm : {Arm::spurious, Arm::clean}) {
      const auto s = std::get<InfluenceSet>(explain(ExplainerFamily::influence, Fidelity::ideal, e, arm));
      ASSERT_EQ(s.references.size(), 8u);
      const bool shortcut = arm == Arm::spurious && e.subclass != Subclass::ns_na;
      for (const auto& r : s.references) {
        EXPECT_EQ(r.label, shortcut ? 1 : e.label);
        EXPECT_EQ(r.artifact, shortcut ? true : e.artifact);
        EXPECT_EQ((*pool)[r.index].label, r.label);
      }
    }
  }
}

TEST_F(SyntheticFixture, NoisyHeatmapUsesRangeScaledNoise) {
  const auto& e = find(Subclass::ns_na);
  const auto h = std::get<Heatmap>(explain(ExplainerFamily::heatmap, Fidelity::noisy, e, Arm::clean));
  const Eigen::MatrixXd noise = h.values - e.mask.cast<double>();
  const double sd = std::sqrt((noise.array() - noise.mean()).square().mean());
  EXPECT_NEAR(sd, 0.5, 0.03);
}

TEST_F(SyntheticFixture, MissingMaskIsRejected) {
  LabeledExample e = find(Subclass::s_a);
  e.mask.resize(0, 0);
  EXPECT_THROW(explain(ExplainerFamily::heatmap, Fidelity::ideal, e, Arm::clean), PreconditionError);
}

// Two-sample permutation test on the squared distance between arm means,
// repeated over independent seed pairs. Under exchangeability each pair
// rejects at alpha = 0.01 with probability 0.01; two or more rejections out of
// ten happen with probability 0.004.
TEST_F(SyntheticFixture, RandomExplainersAreArmIndependent) {
  EncodingConfig enc;
  enc.classes = 2;
  const std::size_t n = 1000;
  std::vector<const LabeledExample*> inputs;
  for (std::size_t i = 0; i < n; ++i) inputs.push_back(&bundle->model_train[i % bundle->model_train.size()]);
  std::vector<std::uint64_t> streams(n);
  for (std::size_t i = 0; i < n; ++i) streams[i] = i;
  for (ExplainerFamily f : {ExplainerFamily::heatmap, ExplainerFamily::influence, ExplainerFamily::concepts}) {
    const SyntheticExplainer ex(SyntheticExplainerSpec::make(f, Fidelity::random), context, enc);
    int rejections = 0;
    for (std::uint64_t pair = 0; pair < 10; ++pair) {
      Eigen::MatrixXd rows;
      for (int a = 0; a < 2; ++a) {
        const ModelRef model{a ? Arm::spurious : Arm::clean, 1000 + 2 * pair + static_cast<std::uint64_t>(a)};
        const auto out = ex.explain(model, inputs, streams);
        for (std::size_t i = 0; i < n; ++i) {
          const Eigen::VectorXd v = ex.encode(out[i]);
          if (rows.size() == 0) rows.resize(2 * n, v.size());
          rows.row(static_cast<Index>(a * n + i)) = v.transpose();
        }
      }
      // Signs +1 / -1 select the arm; the mean difference is rows^T s / n.
      auto statistic = [&](const std::vector<double>& signs) {
        const Eigen::Map<const Eigen::VectorXd> s(signs.data(), static_cast<Index>(signs.size()));
        return (rows.transpose() * s / static_cast<double>(n)).squaredNorm();
      };
      std::vector<double> labels(2 * n);
      for (std::size_t i = 0; i < 2 * n; ++i) labels[i] = i >= n ? 1.0 : -1.0;
      const double observed = statistic(labels);
      std::mt19937_64 rng(17 + pair);
      int extreme = 0;
      const int permutations = 199;
      for (int p = 0; p < permutations; ++p) {
        std::shuffle(labels.begin(), labels.end(), rng);
        extreme += statistic(labels) >= observed;
      }
      rejections += (extreme + 1.0) / (permutations + 1.0) <= 0.01;
    }
    EXPECT_LE(rejections, 1) << to_string(f);
  }
}
