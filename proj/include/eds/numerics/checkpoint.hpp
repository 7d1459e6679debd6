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
#include <string>
#include <vector>

#include "eds/numerics/train.hpp"

namespace eds {

// Checkpoint container:
//   "EDSC" | version u16 | entry count u16 |
//   per entry: name length u8, name, rank u8, dims u32..., values f32... |
//   step u64 | learning rate f32
// All integers little-endian. Values are stored at 32-bit precision.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ModelSpec& spec,
                                            const ModelCheckpoint& checkpoint);
// Validates names and shapes against `spec`. The seed is not part of the
// binary payload and is left at zero; see load_checkpoint.
ModelCheckpoint decode_checkpoint(const ModelSpec& spec,
                                  std::span<const std::uint8_t> bytes);

// Rounds every parameter through float, i.e. the state a checkpoint file
// reproduces.
Parameters round_to_f32(Parameters params);

// Writes `<path>` and a JSON sidecar `<path>.json` with seed and config hash.
void save_checkpoint(const std::string& path, const ModelSpec& spec,
                     const ModelCheckpoint& checkpoint, const std::string& config_hash);
ModelCheckpoint load_checkpoint(const std::string& path, const ModelSpec& spec);

}  // namespace eds
