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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "eds/errors.hpp"
#include "eds/pipeline/pipeline.hpp"

using namespace eds;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("eds-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c = ExperimentConfig::parse(R"(
preset = "table1-synthetic"
[experiment]
runs = 2
[data]
per_class = 600
[explainers]
families = ["concept", "influence"]
fidelities = ["ideal", "random"]
)");
  c.out = out.string();
  return c;
}

EDSReport cell(double mean, double ci) {
  EDSReport r;
  r.explainer = "x";
  r.runs = 5;
  for (MetricSummary* s : {&r.overall, &r.s_na, &r.ns_na, &r.s_a, &r.ns_a}) {
    s->mean = mean;
    s->ci95 = ci;
    s->runs = std::vector<double>(5, mean);
  }
  return r;
}

}  // namespace

TEST(Config, PresetsValidateAndRoundTrip) {
  for (const auto& name : ExperimentConfig::preset_names()) {
    const auto c = ExperimentConfig::preset(name);
    EXPECT_NO_THROW(c.validate()) << name;
    const std::string text = c.to_toml();
    EXPECT_EQ(ExperimentConfig::parse(text).to_toml(), text) << name;
  }
  EXPECT_THROW(ExperimentConfig::preset("nope"), ConfigError);
}

TEST(Config, OverridesAndErrors) {
  const auto c = ExperimentConfig::parse("preset = \"dsprites-desk\"\n[experiment]\nseed = 3\nruns = 2\n");
  EXPECT_EQ(c.runs, 2);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.zoo.models_per_arm, 20u);
  EXPECT_NE(c.task.seed, ExperimentConfig::preset("dsprites-desk").task.seed);
  EXPECT_THROW(ExperimentConfig::parse("[experiment]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[nosuch]\nx = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[experiment]\nruns = many\n"), ConfigError);
  auto bad = ExperimentConfig::preset("table1-synthetic");
  bad.runs = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, StageKeysTrackTheirInputs) {
  auto a = ExperimentConfig::preset("table1-synthetic");
  auto b = a;
  b.runs = 3;
  EXPECT_EQ(a.data_key(), b.data_key());
  EXPECT_EQ(a.zoo_key(), b.zoo_key());
  EXPECT_NE(a.eds_key(), b.eds_key());
  b = a;
  b.task.per_class = 500;
  EXPECT_NE(a.data_key(), b.data_key());
  EXPECT_NE(a.eds_key(), b.eds_key());
}

TEST(Report, CellFormatting) {
  EXPECT_EQ(format_cell(0.75, 0.02), "0.750 ± 0.020");
  EXPECT_EQ(format_cell(0.5, 0.0), "0.500 ± 0.000");
}

TEST(Report, MissingValuesAreEmptyAndJsonRoundTrips) {
  Report rep;
  rep.experiment = "t";
  rep.dataset = "dsprites";
  ReportRow baseline_only{"concept", "ideal", "stripe", std::nullopt, BaselineReport{}};
  baseline_only.baseline->family = ExplainerFamily::concepts;
  baseline_only.baseline->similarity = "neg_l2";
  baseline_only.baseline->fam = -0.5;
  ReportRow eds_only{"heatmap", "ideal", "stripe", cell(0.75, 0.02), std::nullopt};
  rep.rows = {baseline_only, eds_only};

  const std::string csv = render_csv(rep);
  std::istringstream lines(csv);
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(header, "explainer,fidelity,artifact,overall,s_na,ns_na,s_a,ns_a,kssd,ccm,fam,ci95");
  EXPECT_EQ(first.rfind("concept,ideal,stripe,,,,,,", 0), 0u) << first;
  EXPECT_NE(first.find("-0.5"), std::string::npos);
  EXPECT_EQ(second.rfind("heatmap,ideal,stripe,0.75", 0), 0u) << second;
  EXPECT_NE(second.find(",,,,0.02"), std::string::npos) << second;  // baselines empty, ci95 set
  EXPECT_NE(render_text(rep).find("0.750 ± 0.020"), std::string::npos);

  EXPECT_EQ(report_from_json(to_json(rep)), rep);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(to_json(rep).dump())), rep);
}

TEST(Lock, SecondOwnerIsRefusedAndStaleLockIsTaken) {
  const fs::path dir = scratch("lock");
  fs::create_directories(dir);
  {
    DirectoryLock first(dir.string());
    EXPECT_THROW(DirectoryLock second(dir.string()), LockError);
  }
  EXPECT_FALSE(fs::exists(dir / ".lock"));
  {
    std::ofstream(dir / ".lock") << "999999999\n";
  }
  EXPECT_NO_THROW(DirectoryLock again(dir.string()));
  fs::remove_all(dir);
}

TEST(Pipeline, IdempotentAndReproducible) {
  const fs::path a = scratch("pipe-a"), b = scratch("pipe-b");
  Report first;
  {
    Pipeline p(small_config(a));
    first = p.run();
    EXPECT_EQ(p.stages().skipped.size(), 0u);
  }
  ASSERT_EQ(first.rows.size(), 4u);
  for (const auto& row : first.rows) {
    ASSERT_TRUE(row.eds.has_value());
    ASSERT_TRUE(row.baseline.has_value());
    EXPECT_EQ(row.eds->runs, 2);
  }
  const std::string csv = slurp(a / "report" / "report.csv");
  {
    Pipeline p(small_config(a));
    EXPECT_EQ(p.run(), first);
    // The report is cheap and always rewritten.
    EXPECT_EQ(p.stages().ran, std::vector<std::string>{"report"});
    EXPECT_EQ(p.stages().skipped.size(), 5u);
  }
  fs::remove_all(a / "eds");
  {
    Pipeline p(small_config(a));
    p.run();
    EXPECT_EQ(p.stages().ran, (std::vector<std::string>{"eds", "report"}));
  }
  EXPECT_EQ(slurp(a / "report" / "report.csv"), csv);
  {
    Pipeline p(small_config(b));
    p.run();
  }
  EXPECT_EQ(slurp(b / "report" / "report.csv"), csv);
  fs::remove_all(a);
  fs::remove_all(b);
}
