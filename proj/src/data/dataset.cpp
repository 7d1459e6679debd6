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

#include "eds/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "eds/bytes.hpp"
#include "eds/errors.hpp"

namespace eds {

std::string to_string(DatasetMode mode) {
  return mode == DatasetMode::dsprites ? "dsprites" : "shapes";
}

DatasetMode mode_from_string(const std::string& name) {
  if (name == "dsprites" || name == "dsprites-like") return DatasetMode::dsprites;
  if (name == "shapes" || name == "shapes-like" || name == "3dshapes") return DatasetMode::shapes;
  throw ConfigError("unknown dataset mode '" + name + "'");
}

std::string to_string(Arm arm) { return arm == Arm::spurious ? "spurious" : "clean"; }

Geometry TaskConfig::geometry() const {
  return mode == DatasetMode::dsprites ? Geometry{64, 64, 1} : Geometry{64, 64, 3};
}

void TaskConfig::validate() const {
  if (classes.size() < 2) throw ConfigError("a task needs at least 2 classes");
  if (per_class < 10) {
    throw ConfigError("per-class count " + std::to_string(per_class) + " is below 10");
  }
  if (spurious_class < 0 || spurious_class >= class_count()) {
    throw ConfigError("spurious class " + std::to_string(spurious_class) + " is not a class index");
  }
  artifact.validate(geometry());
}

PartitionSizes partition_sizes(std::size_t total) {
  PartitionSizes s;
  s.model_train = total * 80 / 100;
  s.discriminator_train = total * 14 / 100;
  s.validation = total - s.model_train - s.discriminator_train;
  return s;
}

bool DatasetBundle::operator==(const DatasetBundle& o) const {
  return task.mode == o.task.mode && task.classes == o.task.classes &&
         task.per_class == o.task.per_class && task.artifact == o.task.artifact &&
         task.spurious_class == o.task.spurious_class && task.seed == o.task.seed &&
         model_train == o.model_train && discriminator_train == o.discriminator_train &&
         validation == o.validation;
}

SpriteSpec sample_sprite(const TaskConfig& task, int label, std::uint64_t id) {
  std::mt19937_64 rng(mix_seed(task.seed, id));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpriteSpec s;
  s.shape = task.classes.at(static_cast<std::size_t>(label));
  if (task.mode == DatasetMode::dsprites) {
    s.scale = 10.0 + 4.0 * u(rng);
    s.orientation = 2.0 * std::numbers::pi * u(rng);
    s.center_x = 20.0 + 24.0 * u(rng);
    s.center_y = 20.0 + 24.0 * u(rng);
  } else {
    s.scale = 7.0 + 3.0 * u(rng);
    s.orientation = 0.6 * (u(rng) - 0.5);
    s.center_x = 24.0 + 16.0 * u(rng);
    s.center_y = 34.0 + 10.0 * u(rng);
    SceneHues h;
    h.floor = u(rng);
    h.wall = u(rng);
    h.object = u(rng);
    s.scene = h;
  }
  return s;
}

namespace {

// Marks exactly half of each class (alternating floor/ceil across classes)
// as artifact-bearing.
void inject_balanced(std::vector<LabeledExample>& part, const TaskConfig& task,
                     std::uint64_t stream, std::uint64_t id_base) {
  std::mt19937_64 rng(mix_seed(task.seed, stream));
  bool extra = false;
  for (int c = 0; c < task.class_count(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < part.size(); ++i) {
      if (part[i].label == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t take = members.size() / 2;
    if (members.size() % 2 == 1) {
      take += extra ? 1 : 0;
      extra = !extra;
    }
    for (std::size_t j = 0; j < take; ++j) {
      LabeledExample& e = part[members[j]];
      apply_artifact(e.image, task.artifact, id_base + members[j]);
      e.artifact = true;
    }
  }
  for (auto& e : part) retag(e, task.spurious_class);
}

}  // namespace

DatasetBundle build_dataset(const TaskConfig& task) {
  task.validate();
  const Geometry g = task.geometry();
  const std::size_t k = task.classes.size();
  const std::size_t total = task.total();

  // Class-interleaved order keeps every contiguous block class-balanced.
  std::vector<LabeledExample> all;
  all.reserve(total);
  for (std::size_t id = 0; id < total; ++id) {
    const int label = static_cast<int>(id % k);
    LabeledExample e = render_sprite(sample_sprite(task, label, id), g, label);
    retag(e, task.spurious_class);
    all.push_back(std::move(e));
  }

  const PartitionSizes sizes = partition_sizes(total);
  DatasetBundle b;
  b.task = task;
  auto first = std::make_move_iterator(all.begin());
  b.model_train.assign(first, first + static_cast<std::ptrdiff_t>(sizes.model_train));
  first += static_cast<std::ptrdiff_t>(sizes.model_train);
  b.discriminator_train.assign(first, first + static_cast<std::ptrdiff_t>(sizes.discriminator_train));
  first += static_cast<std::ptrdiff_t>(sizes.discriminator_train);
  b.validation.assign(first, std::make_move_iterator(all.end()));

  std::mt19937_64 rng(mix_seed(task.seed, 0xda7a));
  std::shuffle(b.model_train.begin(), b.model_train.end(), rng);
  std::shuffle(b.discriminator_train.begin(), b.discriminator_train.end(), rng);
  std::shuffle(b.validation.begin(), b.validation.end(), rng);

  inject_balanced(b.discriminator_train, task, 0xd15c, sizes.model_train);
  inject_balanced(b.validation, task, 0x7a1d, sizes.model_train + sizes.discriminator_train);
  return b;
}

std::vector<LabeledExample> poison_view(std::span<const LabeledExample> partition,
                                        const PoisonSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw PreconditionError("injection rate must lie in [0, 1]");
  }
  if (spec.spurious_class < 0 || spec.spurious_class >= spec.classes) {
    throw ConfigError("spurious class " + std::to_string(spec.spurious_class) +
                      " is not a class index");
  }
  std::vector<LabeledExample> view(partition.begin(), partition.end());
  if (spec.rate == 0.0) return view;

  std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.arm)));
  auto poison_class = [&](int c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < view.size(); ++i) {
      if (view[i].label == c && !view[i].artifact) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(spec.rate * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < take; ++j) {
      LabeledExample& e = view[members[j]];
      apply_artifact(e.image, spec.artifact, mix_seed(spec.seed, members[j]));
      e.artifact = true;
    }
  };
  if (spec.arm == Arm::spurious) {
    poison_class(spec.spurious_class);
  } else {
    for (int c = 0; c < spec.classes; ++c) poison_class(c);
  }
  for (auto& e : view) retag(e, spec.spurious_class);
  return view;
}

}  // namespace eds
