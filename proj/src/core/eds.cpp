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

#include "eds/core/eds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"
#include "eds/parallel.hpp"

namespace eds {

std::vector<std::uint64_t> ModelPool::seeds() const {
  std::vector<std::uint64_t> out;
  for (const auto& m : spurious) out.push_back(m.seed);
  for (const auto& m : clean) out.push_back(m.seed);
  return out;
}

ModelPool model_pool(std::span<const TrainedModel> models) {
  ModelPool pool;
  for (const auto& m : models) {
    (m.arm == Arm::spurious ? pool.spurious : pool.clean).push_back({m.arm, m.seed});
  }
  return pool;
}

void check_disjoint(const ModelPool& training, const ModelPool& validation) {
  const auto a = training.seeds();
  const std::set<std::uint64_t> seen(a.begin(), a.end());
  for (std::uint64_t s : validation.seeds()) {
    if (seen.count(s)) {
      throw LeakageError("model seed " + std::to_string(s) +
                         " is in both the training and the validation model sets");
    }
  }
}

std::vector<Draw> draw_assignments(std::span<const LabeledExample> partition,
                                   const ModelPool& pool, std::uint64_t seed) {
  if (partition.empty()) throw PreconditionError("partition is empty");
  if (pool.spurious.empty() || pool.clean.empty()) {
    throw PreconditionError("each arm needs at least one model");
  }
  std::mt19937_64 rng(mix_seed(seed, 0xd4a5));
  std::array<std::vector<std::size_t>, 4> groups;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    groups[static_cast<std::size_t>(partition[i].subclass)].push_back(i);
  }
  std::vector<Arm> arms(partition.size(), Arm::clean);
  bool extra_spurious = true;
  for (const auto& g : groups) {
    std::vector<Arm> a(g.size(), Arm::clean);
    std::size_t n_spurious = g.size() / 2;
    if (g.size() % 2 == 1) {
      if (extra_spurious) ++n_spurious;
      extra_spurious = !extra_spurious;
    }
    std::fill(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n_spurious), Arm::spurious);
    std::shuffle(a.begin(), a.end(), rng);
    for (std::size_t j = 0; j < g.size(); ++j) arms[g[j]] = a[j];
  }
  std::vector<Draw> out(partition.size());
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const auto& models = pool.arm(arms[i]);
    std::uniform_int_distribution<std::size_t> pick(0, models.size() - 1);
    out[i] = {i, models[pick(rng)], mix_seed(seed, i)};
  }
  return out;
}

std::array<std::size_t, 2> DiscriminatorDataset::arm_counts() const {
  std::array<std::size_t, 2> c{};
  for (int a : arms) ++c[static_cast<std::size_t>(a)];
  return c;
}

namespace {

struct ModelKey {
  bool operator()(const ModelRef& a, const ModelRef& b) const {
    return std::pair(a.arm, a.seed) < std::pair(b.arm, b.seed);
  }
};

constexpr std::size_t kExplainChunk = 64;

}  // namespace

DiscriminatorDataset make_discriminator_dataset(const ModelPool& pool,
                                                std::span<const LabeledExample> partition,
                                                const Explainer& explainer, std::uint64_t seed,
                                                std::size_t jobs) {
  const std::vector<Draw> draws = draw_assignments(partition, pool, seed);
  std::map<ModelRef, std::vector<std::size_t>, ModelKey> by_model;
  for (std::size_t i = 0; i < draws.size(); ++i) by_model[draws[i].model].push_back(i);
  std::vector<std::pair<ModelRef, std::vector<std::size_t>>> groups(by_model.begin(),
                                                                    by_model.end());
  DiscriminatorDataset data;
  data.shape = explainer.shape();
  const Index width = data.shape.geometry.size();
  RowMatrixXf features(static_cast<Index>(draws.size()), width);
  std::vector<std::vector<std::size_t>> refs(draws.size());
  std::vector<char> ok(draws.size(), 0);

  auto explain_into = [&](const ModelRef& model, std::span<const std::size_t> items) {
    std::vector<const LabeledExample*> inputs;
    std::vector<std::uint64_t> streams;
    for (std::size_t d : items) {
      inputs.push_back(&partition[draws[d].input]);
      streams.push_back(draws[d].stream);
    }
    const auto expl = explainer.explain(model, inputs, streams);
    if (expl.size() != items.size()) throw ShapeError("explainer returned a short batch");
    std::vector<Eigen::VectorXd> encoded;
    for (const auto& e : expl) {
      encoded.push_back(explainer.encode(e));
      if (encoded.back().size() != width) throw ShapeError("encoded explanation width mismatch");
      if (!encoded.back().allFinite()) throw NumericError("non-finite encoded explanation");
    }
    for (std::size_t j = 0; j < items.size(); ++j) {
      features.row(static_cast<Index>(items[j])) = encoded[j].cast<float>().transpose();
      if (const auto* s = std::get_if<InfluenceSet>(&expl[j])) {
        for (const auto& r : s->references) refs[items[j]].push_back(r.index);
      }
      ok[items[j]] = 1;
    }
  };

  parallel_for(groups.size(), jobs, [&](std::size_t g) {
    const auto& [model, items] = groups[g];
    for (std::size_t start = 0; start < items.size(); start += kExplainChunk) {
      const auto chunk = std::span<const std::size_t>(items).subspan(
          start, std::min(kExplainChunk, items.size() - start));
      try {
        explain_into(model, chunk);
      } catch (const std::exception&) {
        for (std::size_t d : chunk) {
          try {
            explain_into(model, std::span<const std::size_t>(&d, 1));
          } catch (const std::exception&) {
            // counted below
          }
        }
      }
    }
  });

  const auto kept = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  data.skipped = draws.size() - kept;
  if (data.skipped * 100 > draws.size()) {
    throw DatasetError(std::to_string(data.skipped) + " of " + std::to_string(draws.size()) +
                       " explanations failed for " + explainer.id());
  }
  data.features.resize(static_cast<Index>(kept), width);
  Index row = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (!ok[i]) continue;
    data.features.row(row++) = features.row(static_cast<Index>(i));
    data.arms.push_back(draws[i].model.arm == Arm::spurious ? 1 : 0);
    data.subclasses.push_back(partition[draws[i].input].subclass);
    data.sources.push_back(draws[i].model);
    data.references.push_back(std::move(refs[i]));
  }
  return data;
}

std::vector<DumpRecord> to_records(const DiscriminatorDataset& data,
                                   const std::string& explainer) {
  std::vector<DumpRecord> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i].explainer = explainer;
    out[i].model_seed = data.sources[i].seed;
    out[i].arm = data.sources[i].arm;
    out[i].subclass = data.subclasses[i];
    out[i].encoded = data.features.row(static_cast<Index>(i)).transpose();
    out[i].references = data.references[i];
  }
  return out;
}

DiscriminatorDataset from_records(std::span<const DumpRecord> records, EncodingShape shape) {
  DiscriminatorDataset data;
  data.shape = shape;
  const Index width = shape.geometry.size();
  data.features.resize(static_cast<Index>(records.size()), width);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.encoded.size() != width) throw FormatError(i, "encoded width does not match the shape");
    data.features.row(static_cast<Index>(i)) = r.encoded.transpose();
    data.arms.push_back(r.arm == Arm::spurious ? 1 : 0);
    data.subclasses.push_back(r.subclass);
    data.sources.push_back({r.arm, r.model_seed});
    data.references.push_back(r.references);
  }
  return data;
}

TrainConfig DiscriminatorSpec::default_train() {
  TrainConfig c;
  c.learning_rate = 0.01;
  c.momentum = 0.9;
  c.batch_size = 64;
  c.epochs = 5;
  c.checkpoint_every = 5;
  return c;
}

ModelSpec DiscriminatorSpec::model() const {
  if (shape.raster) return ModelSpec::raster_discriminator(shape.geometry);
  return ModelSpec::vector_discriminator(shape.geometry.size());
}

namespace {

InputSet feature_inputs(const RowMatrixXf& features) {
  InputSet in;
  in.sample_size = features.cols();
  in.count = static_cast<std::size_t>(features.rows());
  in.fill = [&features](std::size_t i, std::span<double> out) {
    const auto row = features.row(static_cast<Index>(i));
    for (Index j = 0; j < row.size(); ++j) out[static_cast<std::size_t>(j)] = row[j];
  };
  return in;
}

Eigen::VectorXd discriminator_logits(const ModelSpec& spec, const Parameters& params,
                                     const RowMatrixXf& features) {
  constexpr Index kChunk = 256;
  Eigen::VectorXd out(features.rows());
  for (Index start = 0; start < features.rows(); start += kChunk) {
    const Index n = std::min(kChunk, features.rows() - start);
    const Eigen::MatrixXd block = features.middleRows(start, n).cast<double>();
    Tensor batch({n, features.cols()});
    Eigen::Map<RowMatrixXd>(batch.data(), n, features.cols()) = block;
    out.segment(start, n) = logits(spec, params, std::move(batch)).col(0);
  }
  return out;
}

// Mean sigmoid cross-entropy in bits, computed from logits.
double mean_loss_bits(const Eigen::VectorXd& z, std::span<const int> y) {
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    const double v = z[i];
    total += std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))) -
             y[static_cast<std::size_t>(i)] * v;
  }
  return total / static_cast<double>(z.size()) / std::numbers::ln2;
}

}  // namespace

Eigen::VectorXd Discriminator::predict(const RowMatrixXf& features) const {
  const Eigen::VectorXd z = discriminator_logits(spec, parameters, features);
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

Discriminator train_discriminator(const DiscriminatorDataset& data,
                                  const DiscriminatorSpec& spec) {
  if (data.size() == 0) throw PreconditionError("discriminator dataset is empty");
  Discriminator d;
  d.spec = spec.model();
  if (data.features.cols() != d.spec.input.size()) {
    throw ShapeError("discriminator input width mismatch");
  }
  const InputSet inputs = feature_inputs(data.features);
  TrainResult r = train(d.spec, inputs, data.arms, spec.train);
  d.parameters = std::move(r.parameters);
  d.train_loss_bits = mean_loss_bits(discriminator_logits(d.spec, d.parameters, data.features),
                                     data.arms);
  return d;
}

LossDecomposition LossDecomposition::from_loss(double loss_bits) {
  return {loss_bits, std::clamp(1.0 - loss_bits, 0.0, 1.0)};
}

RunResult evaluate_discriminator(const Discriminator& d, const DiscriminatorDataset& data) {
  if (data.size() == 0) throw PreconditionError("evaluation dataset is empty");
  const Eigen::VectorXd z = discriminator_logits(d.spec, d.parameters, data.features);
  RunResult r;
  std::array<std::size_t, 4> correct{};
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int pred = z[static_cast<Index>(i)] >= 0.0 ? 1 : 0;
    const auto s = static_cast<std::size_t>(data.subclasses[i]);
    ++r.counts[s];
    if (pred == data.arms[i]) {
      ++correct[s];
      ++total_correct;
    }
  }
  r.overall = static_cast<double>(total_correct) / static_cast<double>(data.size());
  for (std::size_t s = 0; s < 4; ++s) {
    r.subclass[s] = r.counts[s] ? static_cast<double>(correct[s]) / r.counts[s] : 0.0;
  }
  r.loss = LossDecomposition::from_loss(mean_loss_bits(z, data.arms));
  return r;
}

LossDecomposition estimate_js_divergence(const RowMatrixXf& samples0, const RowMatrixXf& samples1,
                                         const DiscriminatorSpec& spec, std::uint64_t seed) {
  if (samples0.rows() == 0 || samples1.rows() == 0) {
    throw PreconditionError("both sample sets must be nonempty");
  }
  if (samples0.cols() != samples1.cols()) throw ShapeError("sample widths differ");
  const Index n = std::min(samples0.rows(), samples1.rows());
  std::mt19937_64 rng(mix_seed(seed, 0x15));
  std::vector<std::pair<int, Index>> items;
  for (const auto* set : {&samples0, &samples1}) {
    std::vector<Index> idx(static_cast<std::size_t>(set->rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (Index i = 0; i < n; ++i) items.emplace_back(set == &samples0 ? 0 : 1, idx[i]);
  }
  std::shuffle(items.begin(), items.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(items.size())));
  if (cut == 0 || cut == items.size()) throw PreconditionError("too few samples to split");
  DiscriminatorDataset train_set, held_out;
  for (auto* d : {&train_set, &held_out}) d->shape = spec.shape;
  train_set.features.resize(static_cast<Index>(cut), samples0.cols());
  held_out.features.resize(static_cast<Index>(items.size() - cut), samples0.cols());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [label, row] = items[i];
    const auto& src = label == 0 ? samples0 : samples1;
    auto& dst = i < cut ? train_set : held_out;
    const auto at = static_cast<Index>(i < cut ? i : i - cut);
    dst.features.row(at) = src.row(row);
    dst.arms.push_back(label);
    dst.subclasses.push_back(Subclass::ns_na);
  }
  DiscriminatorSpec s = spec;
  s.train.seed = mix_seed(seed, 0x16);
  const Discriminator d = train_discriminator(train_set, s);
  const Eigen::VectorXd z = discriminator_logits(d.spec, d.parameters, held_out.features);
  return LossDecomposition::from_loss(mean_loss_bits(z, held_out.arms));
}

MetricSummary summarize(std::span<const double> values) {
  if (values.size() < 2) throw AggregationError("aggregation needs at least two runs");
  MetricSummary m;
  m.runs.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / (n - 1.0));
  m.ci95 = 1.96 * m.std / std::sqrt(n);
  return m;
}

const MetricSummary& EDSReport::subclass(Subclass s) const {
  switch (s) {
    case Subclass::s_na: return s_na;
    case Subclass::ns_na: return ns_na;
    case Subclass::s_a: return s_a;
    case Subclass::ns_a: return ns_a;
  }
  return overall;
}

EDSReport aggregate_runs(std::span<const RunResult> runs) {
  EDSReport r;
  r.runs = static_cast<int>(runs.size());
  auto collect = [&](auto get) {
    std::vector<double> v;
    for (const auto& run : runs) v.push_back(get(run));
    return summarize(v);
  };
  r.overall = collect([](const RunResult& x) { return x.overall; });
  r.s_na = collect([](const RunResult& x) { return x.subclass[0]; });
  r.ns_na = collect([](const RunResult& x) { return x.subclass[1]; });
  r.s_a = collect([](const RunResult& x) { return x.subclass[2]; });
  r.ns_a = collect([](const RunResult& x) { return x.subclass[3]; });
  r.loss_bits = collect([](const RunResult& x) { return x.loss.loss_bits; }).mean;
  r.js_estimate_bits = collect([](const RunResult& x) { return x.loss.js_estimate_bits; }).mean;
  return r;
}

namespace {

nlohmann::json metric_json(const MetricSummary& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"ci95", m.ci95}, {"per_run", m.runs}};
}

MetricSummary metric_from_json(const nlohmann::json& j) {
  MetricSummary m;
  m.mean = j.at("mean").get<double>();
  m.std = j.at("std").get<double>();
  m.ci95 = j.at("ci95").get<double>();
  m.runs = j.at("per_run").get<std::vector<double>>();
  return m;
}

}  // namespace

nlohmann::json to_json(const EDSReport& r) {
  return {{"explainer", r.explainer},
          {"artifact", r.artifact},
          {"dataset", r.dataset},
          {"overall", metric_json(r.overall)},
          {"s_na", metric_json(r.s_na)},
          {"ns_na", metric_json(r.ns_na)},
          {"s_a", metric_json(r.s_a)},
          {"ns_a", metric_json(r.ns_a)},
          {"loss_bits", r.loss_bits},
          {"js_estimate_bits", r.js_estimate_bits},
          {"runs", r.runs}};
}

EDSReport eds_report_from_json(const nlohmann::json& j) {
  EDSReport r;
  r.explainer = j.at("explainer").get<std::string>();
  r.artifact = j.at("artifact").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.overall = metric_from_json(j.at("overall"));
  r.s_na = metric_from_json(j.at("s_na"));
  r.ns_na = metric_from_json(j.at("ns_na"));
  r.s_a = metric_from_json(j.at("s_a"));
  r.ns_a = metric_from_json(j.at("ns_a"));
  r.loss_bits = j.at("loss_bits").get<double>();
  r.js_estimate_bits = j.at("js_estimate_bits").get<double>();
  r.runs = j.at("runs").get<int>();
  return r;
}

std::uint64_t run_seed(std::uint64_t seed, int run, int purpose) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(run)),
                  static_cast<std::uint64_t>(purpose));
}

RunResult eds_run(const DiscriminatorDataset& train, const DiscriminatorDataset& validation,
                  const TrainConfig& config) {
  DiscriminatorSpec spec{train.shape, config};
  const Discriminator d = train_discriminator(train, spec);
  return evaluate_discriminator(d, validation);
}

namespace {

bool overlaps(std::span<const LabeledExample> a, std::span<const LabeledExample> b) {
  if (a.empty() || b.empty()) return false;
  return a.data() < b.data() + b.size() && b.data() < a.data() + a.size();
}

}  // namespace

EDSReport evaluate_eds(const Explainer& explainer, const ModelPool& training_models,
                       const ModelPool& validation_models,
                       std::span<const LabeledExample> discriminator_partition,
                       std::span<const LabeledExample> validation_partition,
                       const EdsConfig& config) {
  check_disjoint(training_models, validation_models);
  if (overlaps(discriminator_partition, validation_partition)) {
    throw LeakageError("validation partition overlaps the discriminator-training partition");
  }
  if (config.runs < 2) throw AggregationError("aggregation needs at least two runs");
  std::vector<RunResult> runs;
  for (int r = 0; r < config.runs; ++r) {
    const auto train_set = make_discriminator_dataset(
        training_models, discriminator_partition, explainer, run_seed(config.seed, r, 0),
        config.jobs);
    const auto val_set = make_discriminator_dataset(
        validation_models, validation_partition, explainer, run_seed(config.seed, r, 1),
        config.jobs);
    TrainConfig tc = config.discriminator;
    tc.seed = run_seed(config.seed, r, 2);
    runs.push_back(eds_run(train_set, val_set, tc));
  }
  EDSReport report = aggregate_runs(runs);
  report.explainer = explainer.id();
  return report;
}

}  // namespace eds
