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
#include <stdexcept>
#include <string>

namespace eds {

// Geometry of tensors or rasters does not compose.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of the function (label range, probabilities).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Operation invoked in the wrong lifecycle state.
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

// Model or gradient-scope description is inconsistent.
struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite value produced by an iterative numeric procedure.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::uint64_t step, const std::string& what)
      : NumericError("step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed binary payload; `offset` is the byte position of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

struct PopulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model sets used for training and evaluation overlap.
struct LeakageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AggregationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A pipeline stage failed; the message names the stage and its seed.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Another pipeline owns the output directory.
struct LockError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eds
