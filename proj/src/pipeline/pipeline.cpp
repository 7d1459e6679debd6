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

#include "eds/pipeline/pipeline.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <ctime>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "eds/bytes.hpp"
#include "eds/data/format.hpp"
#include "eds/errors.hpp"
#include "eds/parallel.hpp"

namespace eds {

namespace fs = std::filesystem;

DirectoryLock::DirectoryLock(const std::string& dir) {
  fs::create_directories(dir);
  path_ = (fs::path(dir) / ".lock").string();
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      if (::write(fd, pid.data(), pid.size()) < 0) {
        ::close(fd);
        throw LockError("cannot write lockfile " + path_);
      }
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw LockError("cannot create lockfile " + path_);
    long owner = 0;
    std::ifstream(path_) >> owner;
    if (owner > 0 && ::kill(static_cast<pid_t>(owner), 0) == 0) {
      throw LockError(dir + " is in use by process " + std::to_string(owner));
    }
    fs::remove(path_);
  }
  throw LockError("cannot acquire " + path_);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

struct Pipeline::State {
  std::optional<DatasetBundle> bundle;
  bool zoo_loaded = false;
  std::vector<TrainedModel> models;
  ModelPool training;
  ModelPool validation;
  std::vector<LabeledExample> reference_pool;
  std::set<std::string> checked;
};

Pipeline::Pipeline(ExperimentConfig config, std::ostream* log)
    : config_(std::move(config)), log_(log), state_(std::make_unique<State>()) {
  config_.validate();
  lock_ = std::make_unique<DirectoryLock>(config_.out);
}

Pipeline::~Pipeline() = default;

std::string Pipeline::path(const std::string& relative) const {
  return (fs::path(config_.out) / relative).string();
}

std::uint64_t Pipeline::eds_seed() const { return mix_seed(config_.seed, 3); }

bool Pipeline::fresh(const std::string& stage, const std::string& key) const {
  const std::string manifest = path(stage + "/stage.json");
  if (!fs::exists(manifest)) return false;
  try {
    const auto j = nlohmann::json::parse(read_text(manifest));
    return j.at("hash").get<std::string>() == hex64(fnv1a(key));
  } catch (const std::exception&) {
    return false;
  }
}

void Pipeline::mark(const std::string& stage, const std::string& key, double wall, double cpu) {
  const nlohmann::json j = {{"stage", stage},
                            {"hash", hex64(fnv1a(key))},
                            {"inputs", key},
                            {"wall_seconds", wall},
                            {"cpu_seconds", cpu}};
  write_text(path(stage + "/stage.json"), j.dump(2) + "\n");
}

template <typename F>
void Pipeline::stage(const std::string& name, const std::string& key, F body) {
  if (state_->checked.count(name)) return;
  state_->checked.insert(name);
  if (fresh(name, key)) {
    stages_.skipped.push_back(name);
    if (log_) *log_ << "[" << name << "] up to date, skipped\n";
    return;
  }
  std::error_code ec;
  fs::remove(path(name + "/stage.json"), ec);
  if (log_) *log_ << "[" << name << "] running\n" << std::flush;
  const auto start = std::chrono::steady_clock::now();
  const std::clock_t cpu_start = std::clock();
  try {
    body();
  } catch (const std::exception& e) {
    throw StageError(name + " stage failed (experiment seed " + std::to_string(config_.seed) +
                     "): " + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  mark(name, key, secs, static_cast<double>(std::clock() - cpu_start) / CLOCKS_PER_SEC);
  stages_.ran.push_back(name);
  if (log_) {
    *log_ << "[" << name << "] done in " << static_cast<long>(secs + 0.5) << " s\n"
          << std::flush;
  }
}

void Pipeline::gen_data() {
  stage("data", config_.data_key(), [&] {
    state_->bundle = build_dataset(config_.task);
    write_file(path("data/bundle.edsd"), serialize(*state_->bundle));
    const auto sizes = partition_sizes(config_.task.total());
    const nlohmann::json info = {{"model_train", sizes.model_train},
                                 {"discriminator_train", sizes.discriminator_train},
                                 {"validation", sizes.validation}};
    write_text(path("data/partitions.json"), info.dump(2) + "\n");
  });
}

const DatasetBundle& Pipeline::bundle() {
  gen_data();
  if (!state_->bundle) state_->bundle = deserialize(read_file(path("data/bundle.edsd")));
  return *state_->bundle;
}

namespace {

nlohmann::json pool_json(const ModelPool& p) {
  nlohmann::json s = nlohmann::json::array(), c = nlohmann::json::array();
  for (const auto& m : p.spurious) s.push_back(m.seed);
  for (const auto& m : p.clean) c.push_back(m.seed);
  return {{"spurious", s}, {"clean", c}};
}

ModelPool pool_from_json(const nlohmann::json& j) {
  ModelPool p;
  for (const auto& s : j.at("spurious")) p.spurious.push_back({Arm::spurious, s.get<std::uint64_t>()});
  for (const auto& s : j.at("clean")) p.clean.push_back({Arm::clean, s.get<std::uint64_t>()});
  return p;
}

}  // namespace

void Pipeline::train_zoo() {
  const DatasetBundle& data = bundle();
  stage("zoo", config_.zoo_key(), [&] {
    const std::size_t reserve = config_.zoo.reserve();
    ModelPool training, validation;
    std::vector<TrainedModel> all;
    for (Arm arm : {Arm::spurious, Arm::clean}) {
      std::vector<TrainedModel> models;
      if (config_.synthetic_models) {
        for (std::size_t i = 0; i < config_.zoo.models_per_arm; ++i) {
          TrainedModel m;
          m.arm = arm;
          m.index = i;
          m.seed = model_seed(config_.zoo, arm, i, 0);
          models.push_back(std::move(m));
        }
      } else {
        ZooConfig zc = config_.zoo;
        zc.jobs = config_.jobs;
        models = train_population(data, arm, zc);
        if (log_) {
          for (const auto& m : models) {
            *log_ << "[zoo] " << to_string(arm) << " model " << m.index << " seed " << m.seed
                  << " flip " << m.verification.flip_rate << " accuracy "
                  << m.verification.accuracy << " attempts " << m.attempts << "\n";
          }
        }
      }
      auto split = split_population(std::move(models), reserve,
                                    mix_seed(config_.zoo.base_seed, static_cast<int>(arm)));
      for (auto& m : split.discriminator_models) {
        (arm == Arm::spurious ? training.spurious : training.clean).push_back({arm, m.seed});
        all.push_back(std::move(m));
      }
      for (auto& m : split.validation_models) {
        (arm == Arm::spurious ? validation.spurious : validation.clean).push_back({arm, m.seed});
        all.push_back(std::move(m));
      }
    }
    check_disjoint(training, validation);
    if (config_.synthetic_models) {
      std::ostringstream manifest;
      for (const auto& m : all) {
        manifest << nlohmann::json{{"seed", m.seed},
                                   {"arm", to_string(m.arm)},
                                   {"index", m.index},
                                   {"verdict", "synthetic"}}
                        .dump()
                 << '\n';
      }
      write_text(path("zoo/manifest.jsonl"), manifest.str());
    } else {
      const ModelSpec spec =
          ModelSpec::task_default(data.geometry(), data.task.class_count());
      save_zoo(path("zoo"), spec, all, hex64(fnv1a(config_.zoo_key())));
    }
    const nlohmann::json split = {{"training", pool_json(training)},
                                  {"validation", pool_json(validation)}};
    write_text(path("zoo/split.json"), split.dump(2) + "\n");
    state_->models = std::move(all);
    state_->training = training;
    state_->validation = validation;
    state_->zoo_loaded = true;
  });
}

void Pipeline::load_zoo_state() {
  train_zoo();
  if (state_->zoo_loaded) return;
  const auto split = nlohmann::json::parse(read_text(path("zoo/split.json")));
  state_->training = pool_from_json(split.at("training"));
  state_->validation = pool_from_json(split.at("validation"));
  if (!config_.synthetic_models) {
    const DatasetBundle& data = bundle();
    state_->models = load_zoo(path("zoo"),
                              ModelSpec::task_default(data.geometry(), data.task.class_count()));
  }
  state_->zoo_loaded = true;
}

std::vector<std::string> Pipeline::explainer_ids() const {
  std::vector<std::string> ids;
  for (ExplainerFamily f : config_.families) {
    if (config_.synthetic_models) {
      for (Fidelity q : config_.fidelities) ids.push_back(SyntheticExplainerSpec::make(f, q).id());
    } else {
      switch (f) {
        case ExplainerFamily::heatmap: ids.push_back("heatmap-ig"); break;
        case ExplainerFamily::influence: ids.push_back("influence-tracin"); break;
        case ExplainerFamily::concepts: ids.push_back("concept-probe"); break;
      }
    }
  }
  return ids;
}

std::vector<std::unique_ptr<Explainer>> Pipeline::make_explainers() {
  const DatasetBundle& data = bundle();
  load_zoo_state();
  std::vector<std::unique_ptr<Explainer>> out;
  EncodingConfig enc;
  enc.classes = data.task.class_count();
  enc.influence = config_.influence_encoding;
  if (config_.synthetic_models) {
    if (state_->reference_pool.empty()) {
      state_->reference_pool = arm_view(data, Arm::clean, config_.zoo);
    }
    auto ctx = std::make_shared<const SyntheticContext>(data.task, state_->reference_pool,
                                                        config_.real.k);
    for (ExplainerFamily f : config_.families) {
      for (Fidelity q : config_.fidelities) {
        out.push_back(
            std::make_unique<SyntheticExplainer>(SyntheticExplainerSpec::make(f, q), ctx, enc));
      }
    }
  } else {
    RealExplainerConfig rc = config_.real;
    rc.jobs = config_.jobs;
    for (ExplainerFamily f : config_.families) {
      if (log_) *log_ << "[explain] preparing " << to_string(f) << " explainer\n" << std::flush;
      out.push_back(std::make_unique<ModelExplainer>(f, data, config_.zoo, state_->models, rc));
    }
  }
  return out;
}

namespace {

void write_dump(const std::string& file, const DiscriminatorDataset& data,
                const std::string& explainer) {
  std::string text;
  for (const auto& r : to_records(data, explainer)) text += to_json(r).dump() + "\n";
  write_text(file, text);
}

std::vector<DumpRecord> read_dump(const std::string& file) {
  std::istringstream in(read_text(file));
  std::vector<DumpRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(dump_record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

EDSReport combine(const std::vector<RunResult>& runs) {
  if (runs.size() >= 2) return aggregate_runs(runs);
  EDSReport r;
  r.runs = 1;
  const RunResult& x = runs.front();
  auto one = [](double v) { return MetricSummary{v, 0.0, 0.0, {v}}; };
  r.overall = one(x.overall);
  r.s_na = one(x.subclass[0]);
  r.ns_na = one(x.subclass[1]);
  r.s_a = one(x.subclass[2]);
  r.ns_a = one(x.subclass[3]);
  r.loss_bits = x.loss.loss_bits;
  r.js_estimate_bits = x.loss.js_estimate_bits;
  return r;
}

}  // namespace

void Pipeline::explain() {
  load_zoo_state();
  stage("explanations", config_.explain_key(), [&] {
    const DatasetBundle& data = bundle();
    for (const auto& ex : make_explainers()) {
      const std::string dir = "explanations/" + ex->id() + "/";
      const int runs = config_.synthetic_models ? 1 : config_.runs;
      for (int r = 0; r < runs; ++r) {
        if (!config_.synthetic_models) {
          const auto train = make_discriminator_dataset(state_->training, data.discriminator_train,
                                                        *ex, run_seed(eds_seed(), r, 0),
                                                        config_.jobs);
          write_dump(path(dir + "run-" + std::to_string(r) + "-train.jsonl"), train, ex->id());
        }
        const auto val = make_discriminator_dataset(state_->validation, data.validation, *ex,
                                                    run_seed(eds_seed(), r, 1), config_.jobs);
        write_dump(path(dir + "run-" + std::to_string(r) + "-val.jsonl"), val, ex->id());
      }
      if (log_) *log_ << "[explanations] " << ex->id() << " done\n" << std::flush;
    }
  });
}

void Pipeline::eds() {
  explain();
  stage("eds", config_.eds_key(), [&] {
    const DatasetBundle& data = bundle();
    check_disjoint(state_->training, state_->validation);
    const auto explainers = make_explainers();
    const std::size_t runs = static_cast<std::size_t>(config_.runs);
    std::vector<std::vector<RunResult>> results(explainers.size(), std::vector<RunResult>(runs));
    // One task per (explainer, run); every seed is fixed up front so the
    // schedule does not affect the results.
    parallel_for(explainers.size() * runs, config_.jobs, [&](std::size_t t) {
      const Explainer& ex = *explainers[t / runs];
      const int r = static_cast<int>(t % runs);
      DiscriminatorDataset train, val;
      if (config_.synthetic_models) {
        train = make_discriminator_dataset(state_->training, data.discriminator_train, ex,
                                           run_seed(eds_seed(), r, 0), 1);
        val = make_discriminator_dataset(state_->validation, data.validation, ex,
                                         run_seed(eds_seed(), r, 1), 1);
      } else {
        const auto prefix = path("explanations/" + ex.id() + "/run-" + std::to_string(r));
        train = from_records(read_dump(prefix + "-train.jsonl"), ex.shape());
        val = from_records(read_dump(prefix + "-val.jsonl"), ex.shape());
      }
      TrainConfig tc = config_.discriminator;
      tc.seed = run_seed(eds_seed(), r, 2);
      results[t / runs][r] = eds_run(train, val, tc);
    });
    for (std::size_t e = 0; e < explainers.size(); ++e) {
      const auto& ex = explainers[e];
      const auto& runs = results[e];
      EDSReport report = combine(runs);
      report.explainer = ex->id();
      report.artifact = to_string(config_.task.artifact.kind);
      report.dataset = to_string(config_.task.mode);
      write_text(path("eds/" + ex->id() + ".json"), to_json(report).dump(2) + "\n");
      if (log_) {
        *log_ << "[eds] " << ex->id() << " overall "
              << format_cell(report.overall.mean, report.overall.ci95) << "\n"
              << std::flush;
      }
    }
  });
}

void Pipeline::baseline() {
  load_zoo_state();
  stage("baselines", config_.baseline_key(), [&] {
    const DatasetBundle& data = bundle();
    const ReferenceSet refs(data.task);
    for (const auto& ex : make_explainers()) {
      const BaselineReport r =
          evaluate_baselines(*ex, state_->validation, data.validation, refs, config_.runs,
                             mix_seed(eds_seed(), 5), config_.jobs);
      write_text(path("baselines/" + ex->id() + ".json"), to_json(r).dump(2) + "\n");
      if (log_) {
        *log_ << "[baselines] " << ex->id() << " kssd " << r.kssd << " ccm " << r.ccm << " fam "
              << r.fam << "\n"
              << std::flush;
      }
    }
  });
}

Report Pipeline::report() {
  Report rep;
  rep.experiment = config_.name;
  rep.dataset = to_string(config_.task.mode);
  std::size_t i = 0;
  const auto ids = explainer_ids();
  for (ExplainerFamily f : config_.families) {
    const std::size_t per = config_.synthetic_models ? config_.fidelities.size() : 1;
    for (std::size_t q = 0; q < per; ++q, ++i) {
      ReportRow row;
      row.explainer = to_string(f);
      row.fidelity = config_.synthetic_models ? to_string(config_.fidelities[q]) : "real";
      row.artifact = to_string(config_.task.artifact.kind);
      const std::string e = path("eds/" + ids[i] + ".json");
      const std::string b = path("baselines/" + ids[i] + ".json");
      if (fs::exists(e)) row.eds = eds_report_from_json(nlohmann::json::parse(read_text(e)));
      if (fs::exists(b)) {
        row.baseline = baseline_report_from_json(nlohmann::json::parse(read_text(b)));
      }
      rep.rows.push_back(std::move(row));
    }
  }
  write_text(path("report/report.csv"), render_csv(rep));
  write_text(path("report/report.json"), to_json(rep).dump(2) + "\n");
  write_text(path("report/report.txt"), render_text(rep));
  stages_.ran.push_back("report");
  return rep;
}

Report Pipeline::run() {
  gen_data();
  train_zoo();
  explain();
  eds();
  baseline();
  return report();
}

void Pipeline::sweep_intensity() {
  const DatasetBundle& data = bundle();
  stage("sweep", config_.sweep_key(), [&] {
    std::vector<double> grid = config_.sweep_grid;
    if (grid.empty()) {
      switch (data.artifact().kind) {
        case ArtifactKind::square: grid = {1, 2, 3, 4}; break;
        case ArtifactKind::stripe: grid = {1, 2, 3}; break;
        case ArtifactKind::noise: grid = {0.0, 0.05, 0.1, 0.2}; break;
      }
    }
    ZooConfig zc = config_.zoo;
    zc.jobs = config_.jobs;
    const IntensitySweep s = intensity_sweep(data, grid, config_.sweep_seeds, zc);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) {
      rows.push_back({{"intensity", r.intensity}, {"flip_rates", r.flip_rates},
                      {"mean_flip", r.mean_flip}});
      if (log_) *log_ << "[sweep] intensity " << r.intensity << " mean flip " << r.mean_flip << "\n";
    }
    const nlohmann::json j = {{"artifact", to_string(s.kind)},
                              {"rows", rows},
                              {"nondecreasing_steps", s.nondecreasing_steps},
                              {"rank_correlation", s.rank_correlation}};
    write_text(path("sweep/sweep.json"), j.dump(2) + "\n");
  });
}

}  // namespace eds
