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

#include "eds/pipeline/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "eds/errors.hpp"

namespace eds {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_cell(double mean, double ci95) {
  return fixed(mean, 3) + " ± " + fixed(ci95, 3);
}

std::string render_csv(const Report& report) {
  std::ostringstream os;
  os << "explainer,fidelity,artifact,overall,s_na,ns_na,s_a,ns_a,kssd,ccm,fam,ci95\n";
  for (const auto& row : report.rows) {
    os << row.explainer << ',' << row.fidelity << ',' << row.artifact;
    if (row.eds) {
      const auto& e = *row.eds;
      for (const MetricSummary* m : {&e.overall, &e.s_na, &e.ns_na, &e.s_a, &e.ns_a}) {
        os << ',' << fixed(m->mean, 6);
      }
    } else {
      os << ",,,,,";
    }
    if (row.baseline) {
      os << ',' << fixed(row.baseline->kssd, 6) << ',' << fixed(row.baseline->ccm, 6) << ','
         << fixed(row.baseline->fam, 6);
    } else {
      os << ",,,";
    }
    os << ',' << (row.eds ? fixed(row.eds->overall.ci95, 6) : "") << '\n';
  }
  return os.str();
}

std::string render_text(const Report& report) {
  const std::vector<std::string> header = {"Explainer", "Fidelity", "Overall", "S/NA", "NS/NA",
                                           "S/A",       "NS/A",     "KSSD",    "CCM",  "FAM"};
  std::vector<std::vector<std::string>> table = {header};
  for (const auto& row : report.rows) {
    std::vector<std::string> cells = {row.explainer, row.fidelity};
    if (row.eds) {
      const auto& e = *row.eds;
      for (const MetricSummary* m : {&e.overall, &e.s_na, &e.ns_na, &e.s_a, &e.ns_a}) {
        cells.push_back(format_cell(m->mean, m->ci95));
      }
    } else {
      cells.insert(cells.end(), 5, "");
    }
    if (row.baseline) {
      cells.push_back(fixed(row.baseline->kssd, 3));
      cells.push_back(fixed(row.baseline->ccm, 3));
      cells.push_back(fixed(row.baseline->fam, 3));
    } else {
      cells.insert(cells.end(), 3, "");
    }
    table.push_back(std::move(cells));
  }
  // Display width: the plus-minus sign is two bytes but one column.
  auto width = [](const std::string& s) {
    return s.size() - static_cast<std::size_t>(std::count(s.begin(), s.end(), '\xc2'));
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], width(r[c]));
  }
  std::ostringstream os;
  os << report.experiment << " (" << report.dataset << ")\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t c = 0; c < table[i].size(); ++c) {
      os << (c ? "  " : "") << table[i][c] << std::string(widths[c] - width(table[i][c]), ' ');
    }
    os << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  return os.str();
}

nlohmann::json to_json(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"explainer", row.explainer},
                    {"fidelity", row.fidelity},
                    {"artifact", row.artifact},
                    {"eds", row.eds ? to_json(*row.eds) : nlohmann::json(nullptr)},
                    {"baseline", row.baseline ? to_json(*row.baseline) : nlohmann::json(nullptr)}});
  }
  return {{"experiment", report.experiment}, {"dataset", report.dataset}, {"rows", rows}};
}

Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.experiment = j.at("experiment").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  for (const auto& row : j.at("rows")) {
    ReportRow out;
    out.explainer = row.at("explainer").get<std::string>();
    out.fidelity = row.at("fidelity").get<std::string>();
    out.artifact = row.at("artifact").get<std::string>();
    if (!row.at("eds").is_null()) out.eds = eds_report_from_json(row.at("eds"));
    if (!row.at("baseline").is_null()) out.baseline = baseline_report_from_json(row.at("baseline"));
    r.rows.push_back(std::move(out));
  }
  return r;
}

}  // namespace eds
