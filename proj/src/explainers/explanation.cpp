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

#include "eds/explainers/explanation.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>

#include "eds/errors.hpp"

namespace eds {

std::string to_string(ExplainerFamily family) {
  switch (family) {
    case ExplainerFamily::heatmap: return "heatmap";
    case ExplainerFamily::influence: return "influence";
    case ExplainerFamily::concepts: return "concept";
  }
  return "?";
}

ExplainerFamily family_from_string(const std::string& name) {
  if (name == "heatmap") return ExplainerFamily::heatmap;
  if (name == "influence") return ExplainerFamily::influence;
  if (name == "concept") return ExplainerFamily::concepts;
  throw ConfigError("unknown explainer family '" + name + "'");
}

ExplainerFamily family_of(const Explanation& e) {
  return static_cast<ExplainerFamily>(e.index());
}

void check_explanation(const Explanation& e) {
  if (const auto* h = std::get_if<Heatmap>(&e)) {
    if (!h->values.allFinite()) throw DomainError("heatmap has non-finite values");
  } else if (const auto* s = std::get_if<InfluenceSet>(&e)) {
    const auto& refs = s->references;
    for (std::size_t r = 1; r < refs.size(); ++r) {
      if (refs[r].score > refs[r - 1].score) {
        throw DomainError("influence scores increase at rank " + std::to_string(r));
      }
    }
  } else {
    const auto& v = std::get<ConceptVector>(e).values;
    if (!v.allFinite() || (v.array() < 0.0).any() || (v.array() > 1.0).any()) {
      throw DomainError("concept values must lie in [0, 1]");
    }
  }
}

ConceptSchema ConceptSchema::for_task(std::span<const ShapeKind> classes) {
  if (classes.size() < 2) throw ConfigError("concept schema needs at least two classes");
  ConceptSchema s;
  if (classes.size() == 2) {
    s.names.push_back("class:" + to_string(classes[1]));
    s.class_of.push_back(1);
  } else {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      s.names.push_back("class:" + to_string(classes[c]));
      s.class_of.push_back(static_cast<int>(c));
    }
  }
  s.names.push_back("artifact");
  s.class_of.push_back(-1);
  return s;
}

std::size_t ConceptSchema::artifact_index() const {
  for (std::size_t i = 0; i < class_of.size(); ++i) {
    if (class_of[i] < 0) return i;
  }
  throw SpecError("concept schema has no artifact concept");
}

Eigen::VectorXd ConceptSchema::labels(int label, bool artifact) const {
  Eigen::VectorXd v(static_cast<Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    v[static_cast<Index>(i)] = class_of[i] < 0 ? (artifact ? 1.0 : 0.0)
                                               : (class_of[i] == label ? 1.0 : 0.0);
  }
  return v;
}

void ConceptSchema::validate() const {
  if (names.size() != class_of.size()) throw SpecError("concept schema is ragged");
  const auto artifacts = std::count(class_of.begin(), class_of.end(), -1);
  if (artifacts != 1) throw SpecError("concept schema needs exactly one artifact concept");
}

EncodingShape encoding_shape(ExplainerFamily family, Geometry image, std::size_t concepts,
                             std::size_t k, const EncodingConfig& config) {
  switch (family) {
    case ExplainerFamily::heatmap:
      return {{image.height, image.width, 1}, true};
    case ExplainerFamily::influence:
      if (config.influence == InfluenceEncoding::image_stack) {
        return {{config.stack_side, config.stack_side, static_cast<Index>(k)}, true};
      }
      return {{1, config.classes + 2, 1}, false};
    case ExplainerFamily::concepts:
      return {{1, static_cast<Index>(concepts), 1}, false};
  }
  throw ConfigError("unknown explainer family");
}

Eigen::MatrixXd downsample(const Image& image, Index side) {
  const Geometry g = image.geometry;
  if (side <= 0 || g.height % side != 0 || g.width % side != 0) {
    throw ShapeError("cannot downsample " + std::to_string(g.height) + "x" +
                     std::to_string(g.width) + " to side " + std::to_string(side));
  }
  const Index fy = g.height / side, fx = g.width / side;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(side, side);
  for (Index r = 0; r < g.height; ++r) {
    for (Index c = 0; c < g.width; ++c) {
      double v = 0.0;
      for (Index ch = 0; ch < g.channels; ++ch) v += image.at(r, c, ch);
      out(r / fy, c / fx) += v;
    }
  }
  return out / static_cast<double>(fy * fx * g.channels);
}

namespace {

Eigen::VectorXd standardize(const Eigen::MatrixXd& m) {
  // Row-major flattening of the H x W raster.
  Eigen::VectorXd v(m.size());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m(r, c);
  }
  const double mean = v.mean();
  v.array() -= mean;
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (!(sd > 1e-12)) return Eigen::VectorXd::Zero(v.size());
  return v / sd;
}

Eigen::VectorXd summarize(const InfluenceSet& s, int classes) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(classes + 2);
  const auto& refs = s.references;
  if (refs.empty()) return out;
  double max_abs = 0.0;
  for (const auto& r : refs) max_abs = std::max(max_abs, std::abs(r.score));
  double weighted = 0.0, weights = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].label < 0 || refs[i].label >= classes) {
      throw DomainError("influence reference label out of range");
    }
    out[refs[i].label] += 1.0;
    if (refs[i].artifact) out[classes] += 1.0;
    const double w = 1.0 / static_cast<double>(i + 1);
    weighted += w * (max_abs > 0.0 ? refs[i].score / max_abs : 0.0);
    weights += w;
  }
  const double k = static_cast<double>(refs.size());
  out.head(classes + 1) /= k;
  out[classes + 1] = weighted / weights;
  return out;
}

Eigen::VectorXd stack(const InfluenceSet& s, const EncodingConfig& config) {
  const Index side = config.stack_side;
  const auto k = static_cast<Index>(s.references.size());
  // HWC layout with one channel per reference.
  Eigen::VectorXd out(side * side * k);
  for (Index j = 0; j < k; ++j) {
    const std::size_t idx = s.references[static_cast<std::size_t>(j)].index;
    if (idx >= config.pool.size()) throw DomainError("influence reference outside the pool");
    const Eigen::MatrixXd small = downsample(config.pool[idx].image, side);
    for (Index r = 0; r < side; ++r) {
      for (Index c = 0; c < side; ++c) out[(r * side + c) * k + j] = small(r, c);
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd encode(const Explanation& e, const EncodingConfig& config) {
  check_explanation(e);
  if (const auto* h = std::get_if<Heatmap>(&e)) return standardize(h->values);
  if (const auto* s = std::get_if<InfluenceSet>(&e)) {
    switch (config.influence) {
      case InfluenceEncoding::summary: return summarize(*s, config.classes);
      case InfluenceEncoding::image_stack: return stack(*s, config);
    }
    throw ConfigError("unknown influence encoding mode");
  }
  return std::get<ConceptVector>(e).values;
}

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out += kAlphabet[(v >> s) & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> table;
  table.fill(-1);
  for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) throw FormatError(0, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const char ch = text[i + j];
      if (ch == '=' && i + 4 == text.size() && j >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = table[static_cast<unsigned char>(ch)];
      if (d < 0 || pad > 0) throw FormatError(i + j, "invalid base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

nlohmann::json to_json(const DumpRecord& r) {
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(r.encoded.size()) * 4);
  for (Index i = 0; i < r.encoded.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(r.encoded[i]);
    for (int b = 0; b < 4; ++b) raw.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  nlohmann::json j = {{"explainer", r.explainer},
                      {"model_seed", r.model_seed},
                      {"arm", to_string(r.arm)},
                      {"subclass", static_cast<int>(r.subclass)},
                      {"encoded", base64_encode(raw)}};
  if (!r.references.empty()) j["references"] = r.references;
  return j;
}

DumpRecord dump_record_from_json(const nlohmann::json& j) {
  DumpRecord r;
  r.explainer = j.at("explainer").get<std::string>();
  r.model_seed = j.at("model_seed").get<std::uint64_t>();
  const auto arm = j.at("arm").get<std::string>();
  if (arm != "spurious" && arm != "clean") throw FormatError(0, "unknown arm '" + arm + "'");
  r.arm = arm == "spurious" ? Arm::spurious : Arm::clean;
  const int code = j.at("subclass").get<int>();
  if (code < 0 || code > 3) throw FormatError(0, "subclass code out of range");
  r.subclass = static_cast<Subclass>(code);
  const auto raw = base64_decode(j.at("encoded").get<std::string>());
  if (raw.size() % 4 != 0) throw FormatError(0, "encoded vector is not f32 aligned");
  r.encoded.resize(static_cast<Index>(raw.size() / 4));
  for (std::size_t i = 0; i < raw.size() / 4; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
    r.encoded[static_cast<Index>(i)] = std::bit_cast<float>(bits);
  }
  if (j.contains("references")) r.references = j["references"].get<std::vector<std::size_t>>();
  return r;
}

}  // namespace eds
