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

#include "eds/numerics/checkpoint.hpp"

#include <filesystem>

#include <nlohmann/json.hpp>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"

namespace eds {

std::vector<std::uint8_t> encode_checkpoint(const ModelSpec& spec,
                                            const ModelCheckpoint& checkpoint) {
  const auto infos = spec.parameters();
  check_parameters(spec, checkpoint.parameters);
  ByteWriter w;
  w.raw("EDSC");
  w.u16(kCheckpointVersion);
  w.u16(static_cast<std::uint16_t>(infos.size()));
  for (std::size_t i = 0; i < infos.size(); ++i) {
    const auto& info = infos[i];
    w.u8(static_cast<std::uint8_t>(info.name.size()));
    w.raw(info.name);
    w.u8(static_cast<std::uint8_t>(info.shape.size()));
    for (Index d : info.shape) w.u32(static_cast<std::uint32_t>(d));
    const Tensor& t = checkpoint.parameters[i];
    for (Index j = 0; j < t.size(); ++j) w.f32(static_cast<float>(t[j]));
  }
  w.u64(checkpoint.step);
  w.f32(static_cast<float>(checkpoint.learning_rate));
  return w.take();
}

ModelCheckpoint decode_checkpoint(const ModelSpec& spec,
                                  std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != "EDSC") throw FormatError(0, "bad checkpoint magic");
  const std::size_t version_at = r.offset();
  if (r.u16() != kCheckpointVersion) {
    throw FormatError(version_at, "unsupported checkpoint version");
  }
  const auto infos = spec.parameters();
  const std::size_t count_at = r.offset();
  if (r.u16() != infos.size()) {
    throw FormatError(count_at, "entry count does not match the model spec");
  }
  ModelCheckpoint out;
  for (const auto& info : infos) {
    const std::size_t at = r.offset();
    const std::string name = r.raw(r.u8());
    if (name != info.name) {
      throw FormatError(at, "expected entry '" + info.name + "', found '" + name + "'");
    }
    Tensor::Shape shape(r.u8());
    for (Index& d : shape) d = r.u32();
    if (shape != info.shape) {
      throw FormatError(at, name + " has shape " + shape_string(shape) +
                                ", expected " + shape_string(info.shape));
    }
    Tensor t(shape);
    for (Index j = 0; j < t.size(); ++j) t[j] = r.f32();
    out.parameters.push_back(std::move(t));
  }
  out.step = r.u64();
  out.learning_rate = r.f32();
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes");
  return out;
}

Parameters round_to_f32(Parameters params) {
  for (Tensor& t : params) {
    t.values() = t.values().cast<float>().cast<double>();
  }
  return params;
}

void save_checkpoint(const std::string& path, const ModelSpec& spec,
                     const ModelCheckpoint& checkpoint, const std::string& config_hash) {
  write_file(path, encode_checkpoint(spec, checkpoint));
  nlohmann::json side = {{"seed", checkpoint.seed},
                         {"config_hash", config_hash},
                         {"step", checkpoint.step},
                         {"model", spec.describe()}};
  write_text(path + ".json", side.dump(2) + "\n");
}

ModelCheckpoint load_checkpoint(const std::string& path, const ModelSpec& spec) {
  const auto bytes = read_file(path);
  ModelCheckpoint out = decode_checkpoint(spec, bytes);
  if (std::filesystem::exists(path + ".json")) {
    const auto side = nlohmann::json::parse(read_text(path + ".json"));
    out.seed = side.at("seed").get<std::uint64_t>();
  }
  return out;
}

}  // namespace eds
