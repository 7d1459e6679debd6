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

// Command-line driver for the EDS pipeline.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"
#include "eds/parallel.hpp"
#include "eds/pipeline/pipeline.hpp"

namespace {

struct Options {
  std::string config = "table1-synthetic";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> runs;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Config file or preset name")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--runs", o.runs, "Discriminator runs per explainer")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

eds::ExperimentConfig resolve(const Options& o) {
  auto cfg = eds::ExperimentConfig::load(o.config);
  if (o.seed) cfg.reseed(*o.seed);
  if (o.out) cfg.out = *o.out;
  if (o.runs) cfg.runs = *o.runs;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  eds::tune_allocator();
  CLI::App app{"Explanation discriminability score experiments"};
  app.require_subcommand(1);

  std::string presets;
  for (const auto& p : eds::ExperimentConfig::preset_names()) {
    presets += (presets.empty() ? "" : ", ") + p;
  }
  app.footer("Presets: " + presets);

  Options opts;
  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "Generate and freeze the dataset partitions"},
      {"train-zoo", "Train and verify the model population"},
      {"sweep-intensity", "Flip rate against artifact intensity"},
      {"explain", "Dump encoded explanations"},
      {"eds", "Train discriminators and score explainers"},
      {"baseline", "Compute KSSD, CCM and FAM"},
      {"run", "Full pipeline"},
      {"report", "Render CSV, JSON and text reports"},
  };
  bool print_config = false;
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, opts);
    cmd->add_flag("--print-config", print_config, "Print the resolved config and exit");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = resolve(opts);
    if (print_config) {
      std::cout << cfg.to_toml();
      return 0;
    }
    eds::Pipeline pipe(cfg, &std::cerr);
    if (command == "gen-data") {
      pipe.gen_data();
    } else if (command == "train-zoo") {
      pipe.train_zoo();
    } else if (command == "sweep-intensity") {
      pipe.sweep_intensity();
      std::cout << eds::read_text(pipe.path("sweep/sweep.json"));
    } else if (command == "explain") {
      pipe.explain();
    } else if (command == "eds") {
      pipe.eds();
    } else if (command == "baseline") {
      pipe.baseline();
    } else {
      const auto rep = command == "run" ? pipe.run() : pipe.report();
      std::cout << eds::render_text(rep);
    }
  } catch (const eds::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const eds::LockError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
