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
#include <optional>
#include <string>
#include <vector>

#include "eds/core/eds.hpp"
#include "eds/explainers/explainer.hpp"
#include "eds/zoo/zoo.hpp"

namespace eds {

struct ExperimentConfig {
  std::string name = "custom";
  std::uint64_t seed = 0;
  int runs = 5;
  std::string out;
  std::size_t jobs = 1;

  TaskConfig task;
  // Synthetic experiments use model identities only; nothing is trained.
  bool synthetic_models = false;
  ZooConfig zoo;

  std::vector<ExplainerFamily> families = {ExplainerFamily::heatmap, ExplainerFamily::influence,
                                           ExplainerFamily::concepts};
  std::vector<Fidelity> fidelities = {Fidelity::ideal, Fidelity::noisy, Fidelity::random};
  RealExplainerConfig real;
  InfluenceEncoding influence_encoding = InfluenceEncoding::summary;
  TrainConfig discriminator = DiscriminatorSpec::default_train();

  std::vector<double> sweep_grid;
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3, 4, 5};

  // Presets: table1-synthetic, dsprites-desk, shapes-desk.
  static ExperimentConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();
  // Reads a TOML-style file. A top-level `preset = "..."` key starts from
  // that preset; every other key overrides it.
  static ExperimentConfig load_file(const std::string& path);
  // A path to an existing file, otherwise a preset name.
  static ExperimentConfig load(const std::string& path_or_preset);
  static ExperimentConfig parse(const std::string& text);

  // Applies --seed: derives the data, zoo and discriminator seeds.
  void reseed(std::uint64_t seed);
  void validate() const;

  // Canonical text of everything a stage depends on; hashed into manifests.
  std::string data_key() const;
  std::string zoo_key() const;
  std::string explain_key() const;
  std::string eds_key() const;
  std::string baseline_key() const;
  std::string sweep_key() const;
  // Full canonical rendering, parseable by `parse`.
  std::string to_toml() const;
};

}  // namespace eds
