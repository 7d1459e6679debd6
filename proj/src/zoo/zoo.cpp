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

#include "eds/zoo/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"
#include "eds/parallel.hpp"

namespace eds {

namespace fs = std::filesystem;

void SpuriousnessThresholds::validate() const {
  if (!(0.0 <= clean_flip && clean_flip < spurious_flip && spurious_flip <= 1.0)) {
    throw ConfigError("thresholds must satisfy 0 <= clean flip < spurious flip <= 1");
  }
  if (!(min_accuracy >= 0.0 && min_accuracy <= 1.0)) {
    throw ConfigError("minimum accuracy must lie in [0, 1]");
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::spurious: return "spurious";
    case Verdict::clean: return "clean";
    case Verdict::rejected: return "rejected";
  }
  return "?";
}

Verdict verdict_from_string(const std::string& name) {
  if (name == "spurious") return Verdict::spurious;
  if (name == "clean") return Verdict::clean;
  if (name == "rejected") return Verdict::rejected;
  throw FormatError(0, "unknown verdict '" + name + "'");
}

void ZooConfig::validate() const {
  thresholds.validate();
  train.validate();
  if (models_per_arm >= 10000) throw ConfigError("at most 9999 models per arm");
  if (!(reserve_fraction >= 0.0 && reserve_fraction < 1.0)) {
    throw ConfigError("reserve fraction must lie in [0, 1)");
  }
  if (models_per_arm > 0 && reserve() >= models_per_arm) {
    throw ConfigError("reserve must be smaller than the population");
  }
  if (retry_limit < 0) throw ConfigError("retry limit must be non-negative");
  for (double r : {spurious_rate, clean_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("injection rates must lie in [0, 1]");
  }
}

std::size_t ZooConfig::reserve() const {
  return static_cast<std::size_t>(
      std::llround(reserve_fraction * static_cast<double>(models_per_arm)));
}

std::string ZooConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "models=" << models_per_arm << " reserve=" << reserve_fraction
     << " seed=" << base_seed << " " << train.describe()
     << " tau_s=" << thresholds.spurious_flip << " tau_c=" << thresholds.clean_flip
     << " a_min=" << thresholds.min_accuracy << " retries=" << retry_limit
     << " p_s=" << spurious_rate << " p_c=" << clean_rate;
  return os.str();
}

std::uint64_t model_seed(const ZooConfig& config, Arm arm, std::size_t index, int attempt) {
  const std::uint64_t arm_offset = arm == Arm::clean ? 1'000'000u : 0u;
  return config.base_seed + arm_offset + static_cast<std::uint64_t>(attempt) * 10'000u + index;
}

SpuriousnessReport verify_spuriousness(const ModelSpec& spec, const Parameters& params,
                                       std::span<const LabeledExample> probe,
                                       const ArtifactSpec& artifact, int spurious_class,
                                       const SpuriousnessThresholds& thresholds) {
  if (probe.empty()) throw PreconditionError("probe set is empty");
  for (const auto& e : probe) {
    if (e.artifact) throw PreconditionError("probe set contains artifact-bearing images");
  }
  constexpr std::size_t kChunk = 256;
  std::size_t flips = 0, correct = 0;
  for (std::size_t start = 0; start < probe.size(); start += kChunk) {
    const std::size_t end = std::min(probe.size(), start + kChunk);
    const auto chunk = probe.subspan(start, end - start);
    std::vector<LabeledExample> altered(chunk.begin(), chunk.end());
    for (std::size_t i = 0; i < altered.size(); ++i) {
      apply_artifact(altered[i].image, artifact, start + i);
    }
    const auto before = predict(spec, params, to_batch(chunk));
    const auto after = predict(spec, params, to_batch(altered));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (before[i] != spurious_class && after[i] == spurious_class) ++flips;
      if (before[i] == chunk[i].label) ++correct;
    }
  }
  SpuriousnessReport r;
  r.flip_rate = static_cast<double>(flips) / static_cast<double>(probe.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(probe.size());
  const bool accurate = r.accuracy >= thresholds.min_accuracy;
  if (accurate && r.flip_rate >= thresholds.spurious_flip) {
    r.verdict = Verdict::spurious;
  } else if (accurate && r.flip_rate <= thresholds.clean_flip) {
    r.verdict = Verdict::clean;
  } else {
    r.verdict = Verdict::rejected;
  }
  return r;
}

std::vector<LabeledExample> probe_set(std::span<const LabeledExample> partition) {
  std::vector<LabeledExample> out;
  for (const auto& e : partition) {
    if (e.subclass == Subclass::ns_na) out.push_back(e);
  }
  return out;
}

std::vector<LabeledExample> arm_view(const DatasetBundle& bundle, Arm arm,
                                     const ZooConfig& config) {
  PoisonSpec p;
  p.arm = arm;
  p.rate = arm == Arm::spurious ? config.spurious_rate : config.clean_rate;
  p.spurious_class = bundle.spurious_class();
  p.classes = bundle.task.class_count();
  p.artifact = bundle.artifact();
  p.seed = mix_seed(config.base_seed, 0x2001);
  return poison_view(bundle.model_train, p);
}

namespace {

std::vector<ModelCheckpoint> rounded(std::vector<ModelCheckpoint> cps) {
  for (auto& c : cps) {
    c.parameters = round_to_f32(std::move(c.parameters));
    c.learning_rate = static_cast<float>(c.learning_rate);
  }
  return cps;
}

}  // namespace

std::vector<TrainedModel> train_population(const DatasetBundle& bundle, Arm arm,
                                           const ZooConfig& config) {
  config.validate();
  std::vector<TrainedModel> models(config.models_per_arm);
  if (models.empty()) return models;

  const ModelSpec spec = ModelSpec::task_default(bundle.geometry(), bundle.task.class_count());
  const auto view = arm_view(bundle, arm, config);
  const auto labels = class_labels(view);
  const InputSet inputs = image_inputs(view);
  const auto verify_probe = probe_set(bundle.discriminator_train);
  const auto holdout_probe = probe_set(bundle.validation);
  const Verdict wanted = arm == Arm::spurious ? Verdict::spurious : Verdict::clean;

  std::vector<std::string> failures(models.size());
  parallel_for(models.size(), config.jobs, [&](std::size_t i) {
    std::ostringstream tried;
    for (int attempt = 0; attempt <= config.retry_limit; ++attempt) {
      TrainConfig tc = config.train;
      tc.seed = model_seed(config, arm, i, attempt);
      TrainResult r = train(spec, inputs, labels, tc);
      Parameters params = round_to_f32(std::move(r.parameters));
      const SpuriousnessReport rep =
          verify_spuriousness(spec, params, verify_probe, bundle.artifact(),
                              bundle.spurious_class(), config.thresholds);
      if (rep.verdict == wanted) {
        TrainedModel& m = models[i];
        m.arm = arm;
        m.index = i;
        m.seed = tc.seed;
        m.attempts = attempt + 1;
        m.parameters = std::move(params);
        m.checkpoints = rounded(std::move(r.checkpoints));
        m.verification = rep;
        m.holdout = verify_spuriousness(spec, m.parameters, holdout_probe, bundle.artifact(),
                                        bundle.spurious_class(), config.thresholds);
        return;
      }
      tried << (attempt ? ", " : "") << tc.seed << " (flip " << rep.flip_rate
            << ", accuracy " << rep.accuracy << ")";
    }
    failures[i] = tried.str();
  });

  std::ostringstream err;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) err << "\n  model " << i << ": seeds " << failures[i];
  }
  if (!err.str().empty()) {
    throw PopulationError(to_string(arm) + " arm: retry limit exhausted for" + err.str());
  }
  return models;
}

PopulationSplit split_population(std::vector<TrainedModel> models, std::size_t reserve,
                                 std::uint64_t seed) {
  if (reserve > models.size() || (reserve == models.size() && reserve > 0)) {
    throw ConfigError("reserve must be smaller than the population");
  }
  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x5b17));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t cut = models.size() - reserve;
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  PopulationSplit out;
  for (std::size_t j = 0; j < order.size(); ++j) {
    auto& dst = j < cut ? out.discriminator_models : out.validation_models;
    dst.push_back(std::move(models[order[j]]));
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<Index>(b.size()));
  const Eigen::VectorXd dx = x.array() - x.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double den = dx.norm() * dy.norm();
  return den > 0.0 ? dx.dot(dy) / den : 0.0;
}

}  // namespace

IntensitySweep intensity_sweep(const DatasetBundle& bundle, std::span<const double> grid,
                               std::span<const std::uint64_t> seeds, const ZooConfig& config) {
  if (grid.empty()) throw ConfigError("intensity grid is empty");
  if (seeds.empty()) throw ConfigError("intensity sweep needs at least one seed");
  config.validate();
  IntensitySweep sweep;
  sweep.kind = bundle.artifact().kind;
  const ModelSpec spec = ModelSpec::task_default(bundle.geometry(), bundle.task.class_count());
  const auto probe = probe_set(bundle.validation);

  sweep.rows.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    DatasetBundle shifted;
    shifted.task = bundle.task;
    shifted.task.artifact = bundle.artifact().with_intensity(grid[g]);
    shifted.task.artifact.validate(bundle.geometry());
    shifted.model_train = bundle.model_train;
    const auto view = arm_view(shifted, Arm::spurious, config);
    const auto labels = class_labels(view);
    const InputSet inputs = image_inputs(view);
    SweepRow& row = sweep.rows[g];
    row.intensity = grid[g];
    row.flip_rates.resize(seeds.size());
    parallel_for(seeds.size(), config.jobs, [&](std::size_t s) {
      TrainConfig tc = config.train;
      tc.seed = seeds[s];
      TrainResult r = train(spec, inputs, labels, tc);
      row.flip_rates[s] =
          verify_spuriousness(spec, round_to_f32(std::move(r.parameters)), probe,
                              shifted.task.artifact, bundle.spurious_class(),
                              config.thresholds)
              .flip_rate;
    });
    row.mean_flip = std::accumulate(row.flip_rates.begin(), row.flip_rates.end(), 0.0) /
                    static_cast<double>(seeds.size());
  }
  std::vector<double> xs, ys;
  for (const auto& row : sweep.rows) {
    xs.push_back(row.intensity);
    ys.push_back(row.mean_flip);
  }
  for (std::size_t g = 1; g < sweep.rows.size(); ++g) {
    if (sweep.rows[g].mean_flip >= sweep.rows[g - 1].mean_flip) ++sweep.nondecreasing_steps;
  }
  sweep.rank_correlation = sweep.rows.size() > 1 ? pearson(ranks(xs), ranks(ys)) : 0.0;
  return sweep;
}

nlohmann::json manifest_record(const TrainedModel& m,
                               const std::vector<std::string>& checkpoint_paths) {
  return {{"seed", m.seed},
          {"arm", to_string(m.arm)},
          {"index", m.index},
          {"attempts", m.attempts},
          {"verdict", to_string(m.verification.verdict)},
          {"flip_rate", m.verification.flip_rate},
          {"accuracy", m.verification.accuracy},
          {"holdout_flip_rate", m.holdout.flip_rate},
          {"holdout_accuracy", m.holdout.accuracy},
          {"checkpoints", checkpoint_paths}};
}

void save_zoo(const std::string& dir, const ModelSpec& spec,
              std::span<const TrainedModel> models, const std::string& config_hash) {
  std::ostringstream manifest;
  for (const TrainedModel& m : models) {
    const std::string stem = to_string(m.arm) + "-" + std::to_string(m.index);
    std::vector<std::string> paths;
    for (std::size_t c = 0; c < m.checkpoints.size(); ++c) {
      const std::string rel = "models/" + stem + "/epoch-" + std::to_string(c) + ".edsc";
      save_checkpoint((fs::path(dir) / rel).string(), spec, m.checkpoints[c], config_hash);
      paths.push_back(rel);
    }
    ModelCheckpoint final_state{m.parameters,
                                m.checkpoints.empty() ? 0 : m.checkpoints.back().step,
                                m.checkpoints.empty() ? 0.0 : m.checkpoints.back().learning_rate,
                                m.seed};
    const std::string final_rel = "models/" + stem + "/final.edsc";
    save_checkpoint((fs::path(dir) / final_rel).string(), spec, final_state, config_hash);
    nlohmann::json rec = manifest_record(m, paths);
    rec["final"] = final_rel;
    manifest << rec.dump() << '\n';
  }
  write_text((fs::path(dir) / "manifest.jsonl").string(), manifest.str());
}

std::vector<TrainedModel> load_zoo(const std::string& dir, const ModelSpec& spec) {
  std::istringstream in(read_text((fs::path(dir) / "manifest.jsonl").string()));
  std::vector<TrainedModel> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    TrainedModel m;
    m.seed = rec.at("seed").get<std::uint64_t>();
    m.arm = rec.at("arm").get<std::string>() == "spurious" ? Arm::spurious : Arm::clean;
    m.index = rec.at("index").get<std::size_t>();
    m.attempts = rec.at("attempts").get<int>();
    m.verification = {rec.at("flip_rate").get<double>(), rec.at("accuracy").get<double>(),
                      verdict_from_string(rec.at("verdict").get<std::string>())};
    m.holdout.flip_rate = rec.at("holdout_flip_rate").get<double>();
    m.holdout.accuracy = rec.at("holdout_accuracy").get<double>();
    for (const auto& p : rec.at("checkpoints")) {
      ModelCheckpoint c = load_checkpoint((fs::path(dir) / p.get<std::string>()).string(), spec);
      m.checkpoints.push_back(std::move(c));
    }
    m.parameters =
        load_checkpoint((fs::path(dir) / rec.at("final").get<std::string>()).string(), spec)
            .parameters;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace eds
