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

#include "eds/data/example.hpp"

#include "eds/errors.hpp"

namespace eds {

std::string to_string(Subclass s) {
  switch (s) {
    case Subclass::s_na: return "S/NA";
    case Subclass::ns_na: return "NS/NA";
    case Subclass::s_a: return "S/A";
    case Subclass::ns_a: return "NS/A";
  }
  return "?";
}

void retag(LabeledExample& example, int spurious_class) {
  example.subclass = subclass_of(example.label == spurious_class, example.artifact);
}

Tensor to_tensor(const Image& image) {
  const Geometry& g = image.geometry;
  return Tensor({g.height, g.width, g.channels}, image.pixels.cast<double>());
}

Tensor to_batch(std::span<const LabeledExample> examples) {
  std::vector<const LabeledExample*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  return to_batch(ptrs);
}

Tensor to_batch(std::span<const LabeledExample* const> examples) {
  if (examples.empty()) throw PreconditionError("empty batch");
  const Geometry g = examples.front()->image.geometry;
  const Index n = static_cast<Index>(examples.size());
  Tensor batch({n, g.height, g.width, g.channels});
  auto m = batch.matrix(n);
  for (Index i = 0; i < n; ++i) {
    const Image& img = examples[static_cast<std::size_t>(i)]->image;
    if (!(img.geometry == g)) throw ShapeError("mixed image geometries in batch");
    m.row(i) = img.pixels.cast<double>().transpose();
  }
  return batch;
}

InputSet image_inputs(std::span<const LabeledExample> examples) {
  InputSet set;
  set.count = examples.size();
  set.sample_size = examples.empty() ? 0 : examples.front().image.geometry.size();
  set.fill = [examples](std::size_t i, std::span<double> out) {
    const auto& px = examples[i].image.pixels;
    for (Index j = 0; j < px.size(); ++j) out[static_cast<std::size_t>(j)] = px[j];
  };
  return set;
}

std::vector<int> class_labels(std::span<const LabeledExample> examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.label);
  return out;
}

}  // namespace eds
