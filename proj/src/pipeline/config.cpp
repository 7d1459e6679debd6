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

#include "eds/pipeline/config.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"

namespace eds {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// "[a, b, c]" or a bare scalar.
std::vector<std::string> list_of(const std::string& raw) {
  std::string s = trim(raw);
  if (s.empty()) return {};
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated array: " + s);
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Removes '#' comments outside quotes.
std::string strip_comments(const std::string& text) {
  std::ostringstream out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    char quote = 0;
    std::size_t cut = line.size();
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quote) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '#') {
        cut = i;
        break;
      }
    }
    out << line.substr(0, cut) << '\n';
  }
  return out.str();
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T, typename F>
std::string array(const std::vector<T>& items, F render) {
  std::string s = "[";
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + render(items[i]);
  return s + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

int class_index(const TaskConfig& task, const std::string& v) {
  for (std::size_t i = 0; i < task.classes.size(); ++i) {
    if (to_string(task.classes[i]) == v) return static_cast<int>(i);
  }
  if (!v.empty() && std::isdigit(static_cast<unsigned char>(v[0]))) {
    return static_cast<int>(to_u64("data.spurious_class", v));
  }
  throw ConfigError("data.spurious_class: '" + v + "' is not one of the classes");
}

}  // namespace

std::vector<std::string> ExperimentConfig::preset_names() {
  return {"table1-synthetic", "dsprites-desk", "shapes-desk"};
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.task.classes = {ShapeKind::ellipse, ShapeKind::heart};
  c.task.spurious_class = 1;
  c.zoo.models_per_arm = 20;
  c.zoo.reserve_fraction = 0.3;
  if (name == "table1-synthetic") {
    c.task.mode = DatasetMode::dsprites;
    c.task.per_class = 10000;
    c.task.artifact = ArtifactSpec::stripe();
    c.synthetic_models = true;
    c.reseed(7);
  } else if (name == "dsprites-desk" || name == "shapes-desk") {
    c.task.mode = name == "dsprites-desk" ? DatasetMode::dsprites : DatasetMode::shapes;
    c.task.per_class = 2000;
    c.task.artifact = ArtifactSpec::square();
    c.zoo.train.learning_rate = 0.02;
    c.zoo.train.epochs = 4;
    c.real.ig_steps = 32;
    c.fidelities = {};
    c.sweep_grid = {1, 2, 3, 4};
    c.reseed(11);
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.out = "runs/" + name;
  return c;
}

void ExperimentConfig::reseed(std::uint64_t s) {
  seed = s;
  task.seed = mix_seed(s, 1);
  task.artifact.seed = mix_seed(s, 4);
  zoo.base_seed = mix_seed(s, 2) % 1'000'000'000u;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(strip_comments(text));
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c;
  if (auto p = tree.get_optional<std::string>("preset")) {
    c = preset(unquote(*p));
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"", {"preset"}},
      {"experiment", {"name", "seed", "runs", "out", "jobs"}},
      {"data",
       {"mode", "classes", "per_class", "spurious_class", "artifact", "artifact_side",
        "artifact_offset", "artifact_width", "artifact_fill", "artifact_sigma"}},
      {"zoo",
       {"synthetic", "models_per_arm", "reserve_fraction", "learning_rate", "momentum",
        "batch_size", "epochs", "checkpoint_every", "retry_limit", "spurious_rate",
        "clean_rate", "tau_s", "tau_c", "a_min"}},
      {"explainers",
       {"families", "fidelities", "ig_steps", "k", "candidates", "probe_l2",
        "influence_encoding"}},
      {"discriminator", {"learning_rate", "momentum", "batch_size", "epochs"}},
      {"sweep", {"grid", "seeds"}},
  };
  std::map<std::string, std::string> values;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      values["." + section] = node.data();
      if (section != "preset") throw ConfigError("unknown top-level key '" + section + "'");
      continue;
    }
    const auto it = known.find(section);
    if (it == known.end() || section.empty()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, leaf] : node) {
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
      values[section + "." + key] = unquote(leaf.data());
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };

  if (auto v = get("experiment.name")) c.name = *v;
  if (auto v = get("experiment.seed")) c.reseed(to_u64("experiment.seed", *v));
  if (auto v = get("experiment.runs")) c.runs = static_cast<int>(to_u64("experiment.runs", *v));
  if (auto v = get("experiment.out")) c.out = *v;
  if (auto v = get("experiment.jobs")) c.jobs = to_u64("experiment.jobs", *v);

  if (auto v = get("data.mode")) c.task.mode = mode_from_string(*v);
  if (auto v = get("data.classes")) {
    c.task.classes.clear();
    for (const auto& s : list_of(*v)) c.task.classes.push_back(shape_from_string(s));
  }
  if (auto v = get("data.per_class")) c.task.per_class = to_u64("data.per_class", *v);
  if (auto v = get("data.spurious_class")) c.task.spurious_class = class_index(c.task, *v);
  if (auto v = get("data.artifact")) {
    const std::uint64_t noise_seed = c.task.artifact.seed;
    switch (artifact_from_string(*v)) {
      case ArtifactKind::square: c.task.artifact = ArtifactSpec::square(); break;
      case ArtifactKind::stripe: c.task.artifact = ArtifactSpec::stripe(); break;
      case ArtifactKind::noise: c.task.artifact = ArtifactSpec::noise(); break;
    }
    c.task.artifact.seed = noise_seed;
  }
  if (auto v = get("data.artifact_side")) c.task.artifact.side = static_cast<Index>(to_u64("data.artifact_side", *v));
  if (auto v = get("data.artifact_offset")) c.task.artifact.offset = static_cast<Index>(to_u64("data.artifact_offset", *v));
  if (auto v = get("data.artifact_width")) c.task.artifact.width = static_cast<Index>(to_u64("data.artifact_width", *v));
  if (auto v = get("data.artifact_fill")) c.task.artifact.fill = static_cast<float>(to_double("data.artifact_fill", *v));
  if (auto v = get("data.artifact_sigma")) c.task.artifact.sigma = to_double("data.artifact_sigma", *v);

  if (auto v = get("zoo.synthetic")) c.synthetic_models = to_bool("zoo.synthetic", *v);
  if (auto v = get("zoo.models_per_arm")) c.zoo.models_per_arm = to_u64("zoo.models_per_arm", *v);
  if (auto v = get("zoo.reserve_fraction")) c.zoo.reserve_fraction = to_double("zoo.reserve_fraction", *v);
  if (auto v = get("zoo.learning_rate")) c.zoo.train.learning_rate = to_double("zoo.learning_rate", *v);
  if (auto v = get("zoo.momentum")) c.zoo.train.momentum = to_double("zoo.momentum", *v);
  if (auto v = get("zoo.batch_size")) c.zoo.train.batch_size = static_cast<int>(to_u64("zoo.batch_size", *v));
  if (auto v = get("zoo.epochs")) c.zoo.train.epochs = static_cast<int>(to_u64("zoo.epochs", *v));
  if (auto v = get("zoo.checkpoint_every")) c.zoo.train.checkpoint_every = static_cast<int>(to_u64("zoo.checkpoint_every", *v));
  if (auto v = get("zoo.retry_limit")) c.zoo.retry_limit = static_cast<int>(to_u64("zoo.retry_limit", *v));
  if (auto v = get("zoo.spurious_rate")) c.zoo.spurious_rate = to_double("zoo.spurious_rate", *v);
  if (auto v = get("zoo.clean_rate")) c.zoo.clean_rate = to_double("zoo.clean_rate", *v);
  if (auto v = get("zoo.tau_s")) c.zoo.thresholds.spurious_flip = to_double("zoo.tau_s", *v);
  if (auto v = get("zoo.tau_c")) c.zoo.thresholds.clean_flip = to_double("zoo.tau_c", *v);
  if (auto v = get("zoo.a_min")) c.zoo.thresholds.min_accuracy = to_double("zoo.a_min", *v);

  if (auto v = get("explainers.families")) {
    c.families.clear();
    for (const auto& s : list_of(*v)) c.families.push_back(family_from_string(s));
  }
  if (auto v = get("explainers.fidelities")) {
    c.fidelities.clear();
    for (const auto& s : list_of(*v)) c.fidelities.push_back(fidelity_from_string(s));
  }
  if (auto v = get("explainers.ig_steps")) c.real.ig_steps = static_cast<int>(to_u64("explainers.ig_steps", *v));
  if (auto v = get("explainers.k")) c.real.k = to_u64("explainers.k", *v);
  if (auto v = get("explainers.candidates")) c.real.candidates = to_u64("explainers.candidates", *v);
  if (auto v = get("explainers.probe_l2")) c.real.probe.l2 = to_double("explainers.probe_l2", *v);
  if (auto v = get("explainers.influence_encoding")) {
    if (*v == "summary") c.influence_encoding = InfluenceEncoding::summary;
    else if (*v == "image-stack") c.influence_encoding = InfluenceEncoding::image_stack;
    else throw ConfigError("explainers.influence_encoding: unknown mode '" + *v + "'");
  }

  if (auto v = get("discriminator.learning_rate")) c.discriminator.learning_rate = to_double("discriminator.learning_rate", *v);
  if (auto v = get("discriminator.momentum")) c.discriminator.momentum = to_double("discriminator.momentum", *v);
  if (auto v = get("discriminator.batch_size")) c.discriminator.batch_size = static_cast<int>(to_u64("discriminator.batch_size", *v));
  if (auto v = get("discriminator.epochs")) {
    c.discriminator.epochs = static_cast<int>(to_u64("discriminator.epochs", *v));
    c.discriminator.checkpoint_every = c.discriminator.epochs;
  }

  if (auto v = get("sweep.grid")) {
    c.sweep_grid.clear();
    for (const auto& s : list_of(*v)) c.sweep_grid.push_back(to_double("sweep.grid", s));
  }
  if (auto v = get("sweep.seeds")) {
    c.sweep_seeds.clear();
    for (const auto& s : list_of(*v)) c.sweep_seeds.push_back(to_u64("sweep.seeds", s));
  }
  if (c.out.empty()) c.out = "runs/" + c.name;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  return parse(read_text(path));
}

ExperimentConfig ExperimentConfig::load(const std::string& path_or_preset) {
  if (std::filesystem::is_regular_file(path_or_preset)) return load_file(path_or_preset);
  for (const auto& n : preset_names()) {
    if (n == path_or_preset) return preset(n);
  }
  throw ConfigError("'" + path_or_preset + "' is neither a config file nor a preset");
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("run count must be at least 1");
  if (out.empty()) throw ConfigError("output directory is empty");
  task.validate();
  task.artifact.validate(task.geometry());
  if (task.spurious_class < 0 || task.spurious_class >= task.class_count()) {
    throw ConfigError("spurious class out of range");
  }
  zoo.validate();
  discriminator.validate();
  if (families.empty()) throw ConfigError("no explainers configured");
  if (synthetic_models && fidelities.empty()) {
    throw ConfigError("synthetic experiments need at least one fidelity");
  }
  if (real.ig_steps < 1) throw ConfigError("explainers.ig_steps must be at least 1");
  if (real.k == 0 || real.k > real.candidates) {
    throw ConfigError("explainers.k must lie in [1, candidates]");
  }
  if (!synthetic_models && zoo.models_per_arm > 0 && zoo.reserve() == 0) {
    throw ConfigError("the validation model reserve is empty");
  }
}

std::string ExperimentConfig::to_toml() const {
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << quoted(name) << "\n"
     << "seed = " << seed << "\n"
     << "runs = " << runs << "\n"
     << "out = " << quoted(out) << "\n"
     << "jobs = " << jobs << "\n";
  os << data_key() << zoo_key().substr(data_key().size());
  os << explain_key().substr(zoo_key().size());
  os << "\n[discriminator]\n"
     << "learning_rate = " << num(discriminator.learning_rate) << "\n"
     << "momentum = " << num(discriminator.momentum) << "\n"
     << "batch_size = " << discriminator.batch_size << "\n"
     << "epochs = " << discriminator.epochs << "\n";
  os << "\n[sweep]\n"
     << "grid = " << array(sweep_grid, num) << "\n"
     << "seeds = " << array(sweep_seeds, [](std::uint64_t s) { return std::to_string(s); })
     << "\n";
  return os.str();
}

std::string ExperimentConfig::data_key() const {
  std::ostringstream os;
  os << "\n[data]\n"
     << "mode = " << quoted(to_string(task.mode)) << "\n"
     << "classes = "
     << array(task.classes, [](ShapeKind k) { return quoted(to_string(k)); }) << "\n"
     << "per_class = " << task.per_class << "\n"
     << "spurious_class = " << task.spurious_class << "\n"
     << "artifact = " << quoted(to_string(task.artifact.kind)) << "\n"
     << "artifact_side = " << task.artifact.side << "\n"
     << "artifact_offset = " << task.artifact.offset << "\n"
     << "artifact_width = " << task.artifact.width << "\n"
     << "artifact_fill = " << num(task.artifact.fill) << "\n"
     << "artifact_sigma = " << num(task.artifact.sigma) << "\n"
     << "# seed " << seed << "\n";
  return os.str();
}

std::string ExperimentConfig::zoo_key() const {
  std::ostringstream os;
  os << data_key() << "\n[zoo]\n"
     << "synthetic = " << (synthetic_models ? "true" : "false") << "\n"
     << "models_per_arm = " << zoo.models_per_arm << "\n"
     << "reserve_fraction = " << num(zoo.reserve_fraction) << "\n"
     << "learning_rate = " << num(zoo.train.learning_rate) << "\n"
     << "momentum = " << num(zoo.train.momentum) << "\n"
     << "batch_size = " << zoo.train.batch_size << "\n"
     << "epochs = " << zoo.train.epochs << "\n"
     << "checkpoint_every = " << zoo.train.checkpoint_every << "\n"
     << "retry_limit = " << zoo.retry_limit << "\n"
     << "spurious_rate = " << num(zoo.spurious_rate) << "\n"
     << "clean_rate = " << num(zoo.clean_rate) << "\n"
     << "tau_s = " << num(zoo.thresholds.spurious_flip) << "\n"
     << "tau_c = " << num(zoo.thresholds.clean_flip) << "\n"
     << "a_min = " << num(zoo.thresholds.min_accuracy) << "\n";
  return os.str();
}

std::string ExperimentConfig::explain_key() const {
  std::ostringstream os;
  os << zoo_key() << "\n[explainers]\n"
     << "families = "
     << array(families, [](ExplainerFamily f) { return quoted(to_string(f)); }) << "\n"
     << "fidelities = "
     << array(fidelities, [](Fidelity f) { return quoted(to_string(f)); }) << "\n"
     << "ig_steps = " << real.ig_steps << "\n"
     << "k = " << real.k << "\n"
     << "candidates = " << real.candidates << "\n"
     << "probe_l2 = " << num(real.probe.l2) << "\n"
     << "influence_encoding = "
     << quoted(influence_encoding == InfluenceEncoding::summary ? "summary" : "image-stack")
     << "\n"
     << "# runs " << runs << "\n";
  return os.str();
}

std::string ExperimentConfig::eds_key() const {
  std::ostringstream os;
  os << explain_key() << "# discriminator " << discriminator.describe() << "\n";
  return os.str();
}

std::string ExperimentConfig::baseline_key() const { return explain_key() + "# baselines\n"; }

std::string ExperimentConfig::sweep_key() const {
  std::ostringstream os;
  os << zoo_key() << "# sweep grid "
     << array(sweep_grid, num) << " seeds "
     << array(sweep_seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n";
  return os.str();
}

}  // namespace eds
