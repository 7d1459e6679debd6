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
#include <span>
#include <vector>

#include "eds/data/dataset.hpp"

namespace eds {

// Example block layout (little-endian):
//   "EDSD" | version u16 | n u32 | H u16 | W u16 | C u16 | spurious class u16 |
//   n rasters, f32 row-major | n labels u8 | n artifact flags u8 |
//   n subclass codes u8 (0 S/NA, 1 NS/NA, 2 S/A, 3 NS/A) |
//   n masks, rows bit-packed MSB-first and padded to a byte boundary.
inline constexpr std::uint16_t kDatasetVersion = 1;

std::vector<std::uint8_t> serialize_examples(std::span<const LabeledExample> examples,
                                             Geometry geometry, int spurious_class);

struct DecodedExamples {
  Geometry geometry;
  int spurious_class = 0;
  std::vector<LabeledExample> examples;
};
DecodedExamples deserialize_examples(std::span<const std::uint8_t> bytes);

// Bundle file: the example block over model-train, discriminator-train and
// validation in that order, followed by a trailer:
//   partition sizes 3 x u32 | seed u64 | mode u8 | class count u8 |
//   class shapes u8... | artifact kind u8 | side u16 | offset u16 |
//   width u16 | fill f32 | sigma f64 (as u64 bits) | artifact seed u64 |
//   per-class count u32
std::vector<std::uint8_t> serialize(const DatasetBundle& bundle);
DatasetBundle deserialize(std::span<const std::uint8_t> bytes);

}  // namespace eds
