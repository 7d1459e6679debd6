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

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eds/pipeline/config.hpp"
#include "eds/pipeline/report.hpp"

namespace eds {

// Exclusive ownership of an output directory through a lockfile. A lock
// left behind by a dead process is taken over.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::string path_;
};

struct StageLog {
  std::vector<std::string> ran;
  std::vector<std::string> skipped;
};

// Stages write under config.out and record the hash of their inputs and
// their wall and CPU seconds in <stage>/stage.json; a stage whose hash
// matches is skipped.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config, std::ostream* log = nullptr);
  ~Pipeline();

  void gen_data();
  void train_zoo();
  void explain();
  void eds();
  void baseline();
  Report report();
  void sweep_intensity();
  // gen-data, train-zoo, explain, eds, baseline, report.
  Report run();

  const StageLog& stages() const { return stages_; }
  const ExperimentConfig& config() const { return config_; }
  std::string path(const std::string& relative) const;

  // Explainer ids in report order.
  std::vector<std::string> explainer_ids() const;

 private:
  struct State;

  bool fresh(const std::string& stage, const std::string& key) const;
  void mark(const std::string& stage, const std::string& key, double wall, double cpu);
  template <typename F>
  void stage(const std::string& name, const std::string& key, F body);

  const DatasetBundle& bundle();
  void load_zoo_state();
  std::vector<std::unique_ptr<Explainer>> make_explainers();
  std::uint64_t eds_seed() const;

  ExperimentConfig config_;
  std::ostream* log_;
  std::unique_ptr<DirectoryLock> lock_;
  std::unique_ptr<State> state_;
  StageLog stages_;
};

}  // namespace eds
