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

#include "eds/numerics/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "eds/errors.hpp"

namespace eds {

ModelSpec ModelSpec::task_default(Geometry input, int classes) {
  ModelSpec s;
  s.input = input;
  s.classes = classes;
  s.head = Head::softmax;
  s.layers = {LayerSpec::conv(3, 8),  LayerSpec::relu(), LayerSpec::pool(2),
              LayerSpec::conv(3, 16), LayerSpec::relu(), LayerSpec::pool(2),
              LayerSpec::dense(64),   LayerSpec::relu(), LayerSpec::dense(classes)};
  return s;
}

ModelSpec ModelSpec::raster_discriminator(Geometry input) {
  ModelSpec s;
  s.input = input;
  s.classes = 2;
  s.head = Head::sigmoid;
  s.layers = {LayerSpec::conv(3, 8),  LayerSpec::relu(), LayerSpec::pool(2),
              LayerSpec::conv(3, 16), LayerSpec::relu(), LayerSpec::pool(2),
              LayerSpec::dense(32),   LayerSpec::relu(), LayerSpec::dense(1)};
  return s;
}

ModelSpec ModelSpec::vector_discriminator(Index features) {
  ModelSpec s;
  s.input = {1, features, 1};
  s.classes = 2;
  s.head = Head::sigmoid;
  s.layers = {LayerSpec::dense(32), LayerSpec::relu(), LayerSpec::dense(32),
              LayerSpec::relu(), LayerSpec::dense(1)};
  return s;
}

namespace {

// Walks the layer list, calling `visit(layer index, in_features, geometry)`
// for parameterised layers. Returns nothing; throws on incompatibility.
template <typename Visit>
void walk(const ModelSpec& spec, Visit&& visit) {
  if (spec.input.height <= 0 || spec.input.width <= 0 || spec.input.channels <= 0) {
    throw SpecError("input geometry must be positive");
  }
  Index h = spec.input.height, w = spec.input.width, c = spec.input.channels;
  bool flat = false;
  Index features = h * w * c;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv:
        if (flat) throw SpecError("convolution after a dense layer (layer " + std::to_string(i) + ")");
        if (l.size < 1 || l.channels < 1 || l.size > h || l.size > w) {
          throw SpecError("convolution kernel does not fit (layer " + std::to_string(i) + ")");
        }
        visit(i, l.size * l.size * c, l);
        h = h - l.size + 1;
        w = w - l.size + 1;
        c = l.channels;
        features = h * w * c;
        break;
      case LayerKind::max_pool:
        if (flat) throw SpecError("pooling after a dense layer (layer " + std::to_string(i) + ")");
        if (l.size < 1 || h / l.size < 1 || w / l.size < 1) {
          throw SpecError("pool window does not fit (layer " + std::to_string(i) + ")");
        }
        h /= l.size;
        w /= l.size;
        features = h * w * c;
        break;
      case LayerKind::dense:
        if (l.size < 1) throw SpecError("dense width must be positive");
        visit(i, features, l);
        flat = true;
        features = l.size;
        break;
      case LayerKind::relu:
        break;
    }
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (classes < 2) throw SpecError("class count must be at least 2");
  if (head == Head::sigmoid && classes != 2) {
    throw SpecError("sigmoid head is binary");
  }
  if (layers.empty() || layers.back().kind != LayerKind::dense) {
    throw SpecError("final layer must be dense");
  }
  if (layers.back().size != output_width()) {
    throw SpecError("final dense width " + std::to_string(layers.back().size) +
                    " does not match head width " + std::to_string(output_width()));
  }
  walk(*this, [](std::size_t, Index, const LayerSpec&) {});
}

std::vector<ParameterInfo> ModelSpec::parameters() const {
  validate();
  std::vector<ParameterInfo> out;
  walk(*this, [&](std::size_t i, Index fan_in, const LayerSpec& l) {
    const std::string idx = std::to_string(i);
    if (l.kind == LayerKind::conv) {
      const Index cin = fan_in / (l.size * l.size);
      out.push_back({"conv" + idx + ".weight", {l.size, l.size, cin, l.channels}, i});
      out.push_back({"conv" + idx + ".bias", {l.channels}, i});
    } else {
      out.push_back({"dense" + idx + ".weight", {fan_in, l.size}, i});
      out.push_back({"dense" + idx + ".bias", {l.size}, i});
    }
  });
  return out;
}

Index ModelSpec::parameter_count() const {
  Index n = 0;
  for (const auto& p : parameters()) n += shape_product(p.shape);
  return n;
}

long ModelSpec::penultimate_dense() const {
  long last = -1;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::dense) last = static_cast<long>(i);
  }
  return last;
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  os << "input(" << input.height << "x" << input.width << "x" << input.channels << ")";
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::conv: os << " conv(" << l.channels << "," << l.size << "x" << l.size << ")"; break;
      case LayerKind::max_pool: os << " pool(" << l.size << ")"; break;
      case LayerKind::dense: os << " dense(" << l.size << ")"; break;
      case LayerKind::relu: os << " relu"; break;
    }
  }
  os << (head == Head::softmax ? " softmax" : " sigmoid") << "/" << classes;
  return os.str();
}

Parameters initialize_parameters(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Parameters params;
  for (const auto& info : spec.parameters()) {
    Tensor t(info.shape);
    if (info.name.ends_with(".weight")) {
      const Index fan_in = t.size() / info.shape.back();
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Index i = 0; i < t.size(); ++i) t[i] = u(rng);
    }
    params.push_back(std::move(t));
  }
  return params;
}

Parameters zero_parameters(const ModelSpec& spec) {
  Parameters params;
  for (const auto& info : spec.parameters()) params.emplace_back(info.shape);
  return params;
}

void check_parameters(const ModelSpec& spec, const Parameters& params) {
  const auto infos = spec.parameters();
  if (infos.size() != params.size()) {
    throw SpecError("expected " + std::to_string(infos.size()) +
                    " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < infos.size(); ++i) {
    if (infos[i].shape != params[i].shape()) {
      throw SpecError(infos[i].name + " has shape " + shape_string(params[i].shape()) +
                      ", expected " + shape_string(infos[i].shape));
    }
  }
}

ForwardPass forward(Tape& tape, const ModelSpec& spec, const Parameters& params,
                    Tensor batch, ForwardOptions options) {
  check_parameters(spec, params);
  const Geometry& g = spec.input;
  if (batch.rank() < 1 || batch.dim(0) < 1) {
    throw ShapeError("empty batch");
  }
  const Index n = batch.dim(0);
  const bool exact4 = batch.rank() == 4 && batch.dim(1) == g.height &&
                      batch.dim(2) == g.width && batch.dim(3) == g.channels;
  const bool flat_ok = batch.rank() == 2 && batch.dim(1) == g.size();
  if (!exact4 && !flat_ok) {
    throw ShapeError("batch " + shape_string(batch.shape()) +
                     " does not match model input " + std::to_string(g.height) +
                     "x" + std::to_string(g.width) + "x" + std::to_string(g.channels));
  }
  if (!exact4) batch = batch.reshaped({n, g.height, g.width, g.channels});

  ForwardPass pass;
  pass.input = options.input_requires_grad ? tape.variable(std::move(batch))
                                           : tape.constant(std::move(batch));
  for (const Tensor& p : params) {
    pass.params.push_back(options.params_require_grad ? tape.variable(p)
                                                      : tape.constant(p));
  }
  const std::size_t last = spec.layers.size() - 1;
  Var x = pass.input;
  bool flat = false;
  std::size_t next = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv:
        x = conv2d(x, pass.params[next], pass.params[next + 1]);
        next += 2;
        break;
      case LayerKind::max_pool:
        x = max_pool2d(x, l.size);
        break;
      case LayerKind::dense:
        if (!flat) {
          x = flatten(x);
          flat = true;
        }
        if (i == last) pass.penultimate = x;
        x = add_bias(matmul(x, pass.params[next]), pass.params[next + 1]);
        next += 2;
        break;
      case LayerKind::relu:
        // relu and max-pool commute exactly; pooling first shrinks the relu.
        if (i + 1 < spec.layers.size() && spec.layers[i + 1].kind == LayerKind::max_pool) {
          x = relu(max_pool2d(x, spec.layers[++i].size));
        } else {
          x = relu(x);
        }
        break;
    }
  }
  pass.logits = x;
  return pass;
}

RowMatrixXd logits(const ModelSpec& spec, const Parameters& params, Tensor batch) {
  Tape tape;
  const Index n = batch.dim(0);
  ForwardPass pass = forward(tape, spec, params, std::move(batch));
  return pass.logits.value().matrix(n);
}

RowMatrixXd probabilities(const ModelSpec& spec, const Parameters& params, Tensor batch) {
  RowMatrixXd z = logits(spec, params, std::move(batch));
  if (spec.head == Head::softmax) return softmax_rows(z);
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

Var loss_bits(const ModelSpec& spec, Var logits, std::span<const int> labels) {
  return spec.head == Head::softmax ? softmax_cross_entropy_bits(logits, labels)
                                    : sigmoid_cross_entropy_bits(logits, labels);
}

}  // namespace eds
