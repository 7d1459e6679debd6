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

#include "eds/data/format.hpp"

#include <bit>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"

namespace eds {

namespace {

void write_block(ByteWriter& w, std::span<const LabeledExample> examples,
                 Geometry g, int spurious_class) {
  w.raw("EDSD");
  w.u16(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(examples.size()));
  w.u16(static_cast<std::uint16_t>(g.height));
  w.u16(static_cast<std::uint16_t>(g.width));
  w.u16(static_cast<std::uint16_t>(g.channels));
  w.u16(static_cast<std::uint16_t>(spurious_class));
  for (const auto& e : examples) {
    if (!(e.image.geometry == g)) throw ShapeError("example geometry differs from header");
    for (Index i = 0; i < e.image.pixels.size(); ++i) w.f32(e.image.pixels[i]);
  }
  for (const auto& e : examples) w.u8(static_cast<std::uint8_t>(e.label));
  for (const auto& e : examples) w.u8(e.artifact ? 1 : 0);
  for (const auto& e : examples) w.u8(static_cast<std::uint8_t>(e.subclass));
  const Index row_bytes = (g.width + 7) / 8;
  for (const auto& e : examples) {
    Mask m = e.mask.size() ? e.mask : Mask::Zero(g.height, g.width);
    if (m.rows() != g.height || m.cols() != g.width) throw ShapeError("mask geometry differs");
    for (Index r = 0; r < g.height; ++r) {
      for (Index b = 0; b < row_bytes; ++b) {
        std::uint8_t byte = 0;
        for (Index bit = 0; bit < 8; ++bit) {
          const Index c = b * 8 + bit;
          if (c < g.width && m(r, c)) byte |= static_cast<std::uint8_t>(0x80u >> bit);
        }
        w.u8(byte);
      }
    }
  }
}

DecodedExamples read_block(ByteReader& r) {
  if (r.raw(4) != "EDSD") throw FormatError(0, "bad dataset magic");
  const std::size_t version_at = r.offset();
  if (r.u16() != kDatasetVersion) throw FormatError(version_at, "unsupported dataset version");
  DecodedExamples out;
  const std::uint32_t n = r.u32();
  out.geometry.height = r.u16();
  out.geometry.width = r.u16();
  out.geometry.channels = r.u16();
  out.spurious_class = r.u16();
  const Geometry g = out.geometry;
  const std::size_t pixels = static_cast<std::size_t>(g.size());
  // Reject impossible counts before allocating.
  const std::size_t row_bytes = static_cast<std::size_t>((g.width + 7) / 8);
  const std::size_t per_example = pixels * 4 + 3 + row_bytes * static_cast<std::size_t>(g.height);
  if (per_example == 0 || n > r.remaining() / per_example) {
    throw FormatError(r.offset(), "truncated payload: header announces " +
                                      std::to_string(n) + " examples");
  }
  out.examples.resize(n);
  for (auto& e : out.examples) {
    e.image = Image(g);
    for (Index i = 0; i < e.image.pixels.size(); ++i) e.image.pixels[i] = r.f32();
  }
  for (auto& e : out.examples) e.label = r.u8();
  for (auto& e : out.examples) {
    const std::size_t at = r.offset();
    const std::uint8_t flag = r.u8();
    if (flag > 1) throw FormatError(at, "artifact flag must be 0 or 1");
    e.artifact = flag == 1;
  }
  for (auto& e : out.examples) {
    const std::size_t at = r.offset();
    const std::uint8_t code = r.u8();
    if (code > 3) throw FormatError(at, "subclass code out of range");
    e.subclass = static_cast<Subclass>(code);
  }
  for (auto& e : out.examples) {
    e.mask = Mask::Zero(g.height, g.width);
    for (Index row = 0; row < g.height; ++row) {
      const auto bytes = r.block(row_bytes);
      for (Index c = 0; c < g.width; ++c) {
        e.mask(row, c) = (bytes[static_cast<std::size_t>(c / 8)] >> (7 - c % 8)) & 1u;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_examples(std::span<const LabeledExample> examples,
                                             Geometry geometry, int spurious_class) {
  ByteWriter w;
  write_block(w, examples, geometry, spurious_class);
  return w.take();
}

DecodedExamples deserialize_examples(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  DecodedExamples out = read_block(r);
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes");
  return out;
}

std::vector<std::uint8_t> serialize(const DatasetBundle& b) {
  std::vector<LabeledExample> all;
  all.reserve(b.model_train.size() + b.discriminator_train.size() + b.validation.size());
  all.insert(all.end(), b.model_train.begin(), b.model_train.end());
  all.insert(all.end(), b.discriminator_train.begin(), b.discriminator_train.end());
  all.insert(all.end(), b.validation.begin(), b.validation.end());
  ByteWriter w;
  write_block(w, all, b.geometry(), b.spurious_class());
  w.u32(static_cast<std::uint32_t>(b.model_train.size()));
  w.u32(static_cast<std::uint32_t>(b.discriminator_train.size()));
  w.u32(static_cast<std::uint32_t>(b.validation.size()));
  w.u64(b.task.seed);
  w.u8(static_cast<std::uint8_t>(b.task.mode));
  w.u8(static_cast<std::uint8_t>(b.task.classes.size()));
  for (ShapeKind s : b.task.classes) w.u8(static_cast<std::uint8_t>(s));
  const ArtifactSpec& a = b.task.artifact;
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u16(static_cast<std::uint16_t>(a.side));
  w.u16(static_cast<std::uint16_t>(a.offset));
  w.u16(static_cast<std::uint16_t>(a.width));
  w.f32(a.fill);
  w.u64(std::bit_cast<std::uint64_t>(a.sigma));
  w.u64(a.seed);
  w.u32(static_cast<std::uint32_t>(b.task.per_class));
  return w.take();
}

DatasetBundle deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  DecodedExamples block = read_block(r);
  const std::size_t sizes_at = r.offset();
  const std::size_t n_train = r.u32(), n_disc = r.u32(), n_val = r.u32();
  if (n_train + n_disc + n_val != block.examples.size()) {
    throw FormatError(sizes_at, "partition sizes do not add up to the example count");
  }
  DatasetBundle b;
  b.task.seed = r.u64();
  const std::size_t mode_at = r.offset();
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw FormatError(mode_at, "unknown dataset mode");
  b.task.mode = static_cast<DatasetMode>(mode);
  b.task.classes.resize(r.u8());
  for (ShapeKind& s : b.task.classes) {
    const std::size_t at = r.offset();
    const std::uint8_t v = r.u8();
    if (v > 2) throw FormatError(at, "unknown shape code");
    s = static_cast<ShapeKind>(v);
  }
  ArtifactSpec& a = b.task.artifact;
  const std::size_t kind_at = r.offset();
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw FormatError(kind_at, "unknown artifact kind");
  a.kind = static_cast<ArtifactKind>(kind);
  a.side = r.u16();
  a.offset = r.u16();
  a.width = r.u16();
  a.fill = r.f32();
  a.sigma = std::bit_cast<double>(r.u64());
  a.seed = r.u64();
  b.task.per_class = r.u32();
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes");
  b.task.spurious_class = block.spurious_class;
  if (!(b.task.geometry() == block.geometry)) {
    throw FormatError(mode_at, "dataset mode does not match raster geometry");
  }

  auto& ex = block.examples;
  auto it = std::make_move_iterator(ex.begin());
  b.model_train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  it += static_cast<std::ptrdiff_t>(n_train);
  b.discriminator_train.assign(it, it + static_cast<std::ptrdiff_t>(n_disc));
  it += static_cast<std::ptrdiff_t>(n_disc);
  b.validation.assign(it, std::make_move_iterator(ex.end()));
  return b;
}

}  // namespace eds
