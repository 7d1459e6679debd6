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

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eds/baselines/baselines.hpp"
#include "eds/core/eds.hpp"

namespace eds {

struct ReportRow {
  std::string explainer;  // heatmap, influence, concept
  std::string fidelity;   // ideal, noisy, random, or real
  std::string artifact;
  std::optional<EDSReport> eds;
  std::optional<BaselineReport> baseline;

  bool operator==(const ReportRow&) const = default;
};

struct Report {
  std::string experiment;
  std::string dataset;
  std::vector<ReportRow> rows;

  bool operator==(const Report&) const = default;
};

// "0.750 ± 0.020".
std::string format_cell(double mean, double ci95);

// Columns: explainer, fidelity, artifact, overall, s_na, ns_na, s_a, ns_a,
// kssd, ccm, fam, ci95. Missing values are empty cells.
std::string render_csv(const Report& report);
std::string render_text(const Report& report);
nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

}  // namespace eds
