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

#include "eds/explainers/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eds/errors.hpp"

namespace eds {

Eigen::VectorXd path_integrated_gradients(const GradientField& grad, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& baseline, int steps,
                                          int chunk) {
  if (steps < 1) throw PreconditionError("integrated gradients needs at least one step");
  if (x.size() != baseline.size()) throw ShapeError("baseline geometry differs from input");
  chunk = std::max(1, chunk);
  const Eigen::VectorXd diff = x - baseline;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (int start = 1; start <= steps; start += chunk) {
    const int n = std::min(chunk, steps - start + 1);
    RowMatrixXd points(n, x.size());
    for (int i = 0; i < n; ++i) {
      const double alpha = static_cast<double>(start + i) / steps;
      points.row(i) = (baseline + alpha * diff).transpose();
    }
    const RowMatrixXd g = grad(points);
    if (g.rows() != n || g.cols() != x.size()) throw ShapeError("gradient field shape mismatch");
    for (int i = 0; i < n; ++i) {
      if (!g.row(i).allFinite()) {
        throw NumericError("non-finite gradient at integration step " +
                           std::to_string(start + i) + " of " + std::to_string(steps));
      }
    }
    acc += g.colwise().sum().transpose();
  }
  return diff.cwiseProduct(acc) / static_cast<double>(steps);
}

namespace {

// Column of the logits attributed for class `target`.
int logit_column(const ModelSpec& spec, int target) {
  return spec.head == Head::softmax ? target : 0;
}

}  // namespace

Attribution integrated_gradients(const ModelSpec& spec, const Parameters& params,
                                 const Image& image, int steps,
                                 const std::optional<Image>& baseline) {
  const Geometry g = spec.input;
  if (!(image.geometry == g)) throw ShapeError("image geometry differs from the model input");
  if (baseline && !(baseline->geometry == g)) {
    throw ShapeError("baseline geometry differs from input");
  }
  const Eigen::VectorXd x = image.pixels.cast<double>();
  const Eigen::VectorXd x0 =
      baseline ? Eigen::VectorXd(baseline->pixels.cast<double>()) : Eigen::VectorXd::Zero(g.size());

  Tensor pair({2, g.height, g.width, g.channels});
  pair.values().head(g.size()) = x;
  pair.values().tail(g.size()) = x0;
  const RowMatrixXd ends = logits(spec, params, pair);
  Attribution out;
  if (spec.head == Head::softmax) {
    ends.row(0).maxCoeff(&out.target);
  } else {
    out.target = ends(0, 0) >= 0.0 ? 1 : 0;
  }
  const int col = logit_column(spec, out.target);
  out.output_delta = ends(0, col) - ends(1, col);

  const GradientField field = [&](const RowMatrixXd& points) {
    const Index n = points.rows();
    Tensor batch({n, g.height, g.width, g.channels},
                 Eigen::Map<const Eigen::VectorXd>(points.data(), points.size()));
    Tape tape;
    ForwardPass pass = forward(tape, spec, params, std::move(batch), {false, true});
    const std::vector<int> cols(static_cast<std::size_t>(n), col);
    tape.backward(pick_sum(pass.logits, cols));
    const Tensor grad = pass.input.grad();
    return RowMatrixXd(Eigen::Map<const RowMatrixXd>(grad.data(), n, g.size()));
  };
  const Eigen::VectorXd attr = path_integrated_gradients(field, x, x0, steps);
  out.total = attr.sum();
  out.heatmap.values = Eigen::MatrixXd::Zero(g.height, g.width);
  for (Index r = 0; r < g.height; ++r) {
    for (Index c = 0; c < g.width; ++c) {
      out.heatmap.values(r, c) =
          attr.segment((r * g.width + c) * g.channels, g.channels).sum();
    }
  }
  return out;
}

namespace {

constexpr std::size_t kChunk = 256;

RowMatrixXd scoped_gradients(const ModelSpec& spec, const Parameters& params,
                             const GradientScope& scope, const Tensor& batch,
                             std::span<const int> labels) {
  if (scope.is_final_dense()) return final_dense_gradients(spec, params, batch, labels);
  const Index n = batch.dim(0);
  const Index per = batch.size() / std::max<Index>(n, 1);
  RowMatrixXd out;
  for (Index i = 0; i < n; ++i) {
    Tensor one({1, per}, batch.values().segment(i * per, per));
    const Eigen::VectorXd g =
        per_example_gradient(spec, params, one, labels[static_cast<std::size_t>(i)], scope);
    if (i == 0) out.resize(n, g.size());
    out.row(i) = g.transpose();
  }
  return out;
}

void flush_rounding(Eigen::VectorXd& scores, const Eigen::VectorXd& bound) {
  for (Index j = 0; j < scores.size(); ++j) {
    if (std::abs(scores[j]) <= 1e-12 * bound[j]) scores[j] = 0.0;
  }
}

}  // namespace

TracInIndex::TracInIndex(const ModelSpec& spec, std::span<const ModelCheckpoint> checkpoints,
                         std::span<const LabeledExample> candidates, GradientScope scope)
    : spec_(spec), scope_(std::move(scope)) {
  if (checkpoints.empty()) throw PreconditionError("influence needs at least one checkpoint");
  if (candidates.empty()) throw PreconditionError("influence candidate set is empty");
  scope_.resolve(spec_);
  labels_ = class_labels(candidates);
  for (const auto& c : candidates) artifacts_.push_back(c.artifact);
  for (const auto& cp : checkpoints) {
    checkpoints_.push_back(&cp);
    RowMatrixXd rows;
    for (std::size_t start = 0; start < candidates.size(); start += kChunk) {
      const std::size_t end = std::min(candidates.size(), start + kChunk);
      const RowMatrixXd part =
          scoped_gradients(spec_, cp.parameters, scope_,
                           to_batch(candidates.subspan(start, end - start)),
                           std::span<const int>(labels_).subspan(start, end - start));
      if (start == 0) rows.resize(static_cast<Index>(candidates.size()), part.cols());
      rows.middleRows(static_cast<Index>(start), part.rows()) = part;
    }
    norms_.push_back(rows.rowwise().norm());
    gradients_.push_back(std::move(rows));
  }
}

Eigen::VectorXd TracInIndex::scores(const Tensor& query, int label) const {
  Tensor batch = query;
  if (batch.rank() == 3 || batch.rank() == 1) {
    Tensor::Shape s = batch.shape();
    s.insert(s.begin(), 1);
    batch = batch.reshaped(s);
  }
  const int labels[] = {label};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(size()));
  Eigen::VectorXd bound = out;
  for (std::size_t t = 0; t < checkpoints_.size(); ++t) {
    const RowMatrixXd q = scoped_gradients(spec_, checkpoints_[t]->parameters, scope_, batch,
                                           labels);
    const double eta = checkpoints_[t]->learning_rate;
    out += eta * (gradients_[t] * q.row(0).transpose());
    bound += std::abs(eta) * q.row(0).norm() * norms_[t];
  }
  flush_rounding(out, bound);
  return out;
}

InfluenceSet TracInIndex::top_k(const Eigen::VectorXd& scores, std::size_t k) const {
  if (k > size()) throw PreconditionError("k exceeds the candidate set size");
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = scores[static_cast<Index>(a)];
                      const double sb = scores[static_cast<Index>(b)];
                      return sa > sb || (sa == sb && a < b);
                    });
  InfluenceSet out;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    out.references.push_back({i, scores[static_cast<Index>(i)], labels_[i], artifacts_[i]});
  }
  return out;
}

std::vector<InfluenceSet> TracInIndex::query(const Parameters& model,
                                             std::span<const LabeledExample* const> inputs,
                                             std::size_t k) const {
  std::vector<InfluenceSet> out;
  for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
    const std::size_t end = std::min(inputs.size(), start + kChunk);
    const Tensor batch = to_batch(inputs.subspan(start, end - start));
    const std::vector<int> predicted = predict(spec_, model, batch);
    RowMatrixXd s = RowMatrixXd::Zero(static_cast<Index>(end - start),
                                      static_cast<Index>(size()));
    RowMatrixXd bound = s;
    for (std::size_t t = 0; t < checkpoints_.size(); ++t) {
      const RowMatrixXd q =
          scoped_gradients(spec_, checkpoints_[t]->parameters, scope_, batch, predicted);
      const double eta = checkpoints_[t]->learning_rate;
      s.noalias() += eta * (q * gradients_[t].transpose());
      bound.noalias() += std::abs(eta) * (q.rowwise().norm() * norms_[t].transpose());
    }
    for (Index i = 0; i < s.rows(); ++i) {
      Eigen::VectorXd row = s.row(i).transpose();
      flush_rounding(row, bound.row(i).transpose());
      out.push_back(top_k(row, k));
    }
  }
  return out;
}

InfluenceSet tracin_influence(const ModelSpec& spec, const Parameters& model,
                              std::span<const ModelCheckpoint> checkpoints,
                              std::span<const LabeledExample> candidates, const Image& image,
                              std::size_t k, GradientScope scope) {
  const TracInIndex index(spec, checkpoints, candidates, std::move(scope));
  LabeledExample query;
  query.image = image;
  const LabeledExample* ptr = &query;
  return index.query(model, std::span<const LabeledExample* const>(&ptr, 1), k).front();
}

namespace {

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& theta, double l2) {
  const Eigen::VectorXd z = X * theta;
  // log(1 + e^z) - y z, stable.
  const Eigen::ArrayXd softplus =
      z.array().max(0.0) + (-z.array().abs()).exp().log1p();
  const Index p = theta.size() - 1;
  return (softplus - y.array() * z.array()).mean() +
         0.5 * l2 * theta.head(p).squaredNorm();
}

}  // namespace

LogisticProbe fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                           const ProbeConfig& config) {
  const Index n = features.rows(), p = features.cols();
  if (n == 0) throw PreconditionError("probe training set is empty");
  if (targets.size() != n) throw ShapeError("probe target count mismatch");
  Eigen::MatrixXd X(n, p + 1);
  X << features, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd ridge = Eigen::VectorXd::Constant(p + 1, config.l2);
  ridge[p] = 1e-12;
  double objective = logistic_objective(X, targets, theta, config.l2);
  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::VectorXd prob =
        (1.0 / (1.0 + (-(X * theta).array()).exp())).matrix();
    Eigen::VectorXd grad = X.transpose() * (prob - targets) / static_cast<double>(n);
    grad.head(p) += config.l2 * theta.head(p);
    const Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).matrix();
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X / static_cast<double>(n);
    H.diagonal() += ridge;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    if (!step.allFinite()) throw NumericError("concept probe training diverged");
    double t = 1.0;
    Eigen::VectorXd next = theta - step;
    double next_obj = logistic_objective(X, targets, next, config.l2);
    while (next_obj > objective && t > 1e-8) {
      t *= 0.5;
      next = theta - t * step;
      next_obj = logistic_objective(X, targets, next, config.l2);
    }
    if (!std::isfinite(next_obj)) throw NumericError("concept probe training diverged");
    const double moved = (next - theta).norm();
    theta = next;
    objective = next_obj;
    if (moved < config.tolerance) break;
  }
  return {theta.head(p), theta[p]};
}

Eigen::MatrixXd ConceptProbes::predict(const Eigen::MatrixXd& activations) const {
  if (activations.cols() != mean.size()) throw ShapeError("probe feature width mismatch");
  const Eigen::MatrixXd z =
      (activations.rowwise() - mean).array().rowwise() / scale.array();
  Eigen::MatrixXd out(activations.rows(), static_cast<Index>(probes.size()));
  for (std::size_t c = 0; c < probes.size(); ++c) {
    const Eigen::VectorXd logit = (z * probes[c].weights).array() + probes[c].bias;
    out.col(static_cast<Index>(c)) = (1.0 / (1.0 + (-logit.array()).exp())).matrix();
  }
  return out;
}

Eigen::MatrixXd penultimate_activations(const ModelSpec& spec, const Parameters& params,
                                        std::span<const LabeledExample* const> inputs) {
  Eigen::MatrixXd out;
  for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
    const std::size_t end = std::min(inputs.size(), start + kChunk);
    const auto n = static_cast<Index>(end - start);
    Tape tape;
    const ForwardPass pass =
        forward(tape, spec, params, to_batch(inputs.subspan(start, end - start)));
    const auto a = pass.penultimate.value().matrix(n);
    if (start == 0) out.resize(static_cast<Index>(inputs.size()), a.cols());
    out.middleRows(static_cast<Index>(start), n) = a;
  }
  return out;
}

ConceptProbes fit_concept_probes(const Eigen::MatrixXd& activations,
                                 const Eigen::MatrixXd& concept_labels,
                                 const ConceptSchema& schema, const ProbeConfig& config) {
  schema.validate();
  if (activations.rows() == 0) throw PreconditionError("probe partition is empty");
  if (concept_labels.rows() != activations.rows() ||
      concept_labels.cols() != static_cast<Index>(schema.size())) {
    throw ShapeError("concept labels do not match the schema");
  }
  ConceptProbes out;
  out.schema = schema;
  out.mean = activations.colwise().mean();
  const Eigen::MatrixXd centered = activations.rowwise() - out.mean;
  out.scale = (centered.array().square().colwise().mean()).sqrt().matrix();
  for (Index j = 0; j < out.scale.size(); ++j) {
    if (!(out.scale[j] > 1e-12)) out.scale[j] = 1.0;
  }
  const Eigen::MatrixXd z = centered.array().rowwise() / out.scale.array();
  for (Index c = 0; c < concept_labels.cols(); ++c) {
    out.probes.push_back(fit_logistic(z, concept_labels.col(c), config));
  }
  return out;
}

ConceptProbes fit_concept_probes(const ModelSpec& spec, const Parameters& params,
                                 std::span<const LabeledExample> partition,
                                 const ConceptSchema& schema, const ProbeConfig& config) {
  std::vector<const LabeledExample*> ptrs;
  Eigen::MatrixXd labels(static_cast<Index>(partition.size()),
                         static_cast<Index>(schema.size()));
  for (std::size_t i = 0; i < partition.size(); ++i) {
    ptrs.push_back(&partition[i]);
    labels.row(static_cast<Index>(i)) =
        schema.labels(partition[i].label, partition[i].artifact).transpose();
  }
  return fit_concept_probes(penultimate_activations(spec, params, ptrs), labels, schema, config);
}

std::vector<ConceptVector> concept_extract(const ModelSpec& spec, const Parameters& params,
                                           const ConceptProbes& probes,
                                           std::span<const LabeledExample* const> inputs) {
  const Eigen::MatrixXd p = probes.predict(penultimate_activations(spec, params, inputs));
  std::vector<ConceptVector> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out[i].values = p.row(static_cast<Index>(i)).transpose();
  }
  return out;
}

}  // namespace eds
