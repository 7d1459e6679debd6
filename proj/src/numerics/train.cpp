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

#include "eds/numerics/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "eds/errors.hpp"

namespace eds {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (checkpoint_every < 1 || (epochs > 0 && checkpoint_every > epochs)) {
    throw ConfigError("checkpoint cadence must yield at least one checkpoint");
  }
}

std::string TrainConfig::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "sgd lr=" << learning_rate << " momentum=" << momentum
     << " batch=" << batch_size << " epochs=" << epochs
     << " checkpoint_every=" << checkpoint_every;
  return os.str();
}

Tensor InputSet::gather(std::span<const std::size_t> indices) const {
  const Index n = static_cast<Index>(indices.size());
  Tensor batch({n, sample_size});
  for (Index i = 0; i < n; ++i) {
    const std::size_t at = indices[static_cast<std::size_t>(i)];
    if (at >= count) throw PreconditionError("sample index out of range");
    fill(at, std::span<double>(batch.data() + i * sample_size,
                               static_cast<std::size_t>(sample_size)));
  }
  return batch;
}

InputSet input_set(std::span<const Tensor> samples) {
  InputSet set;
  set.count = samples.size();
  set.sample_size = samples.empty() ? 0 : samples.front().size();
  for (const Tensor& s : samples) {
    if (s.size() != set.sample_size) throw ShapeError("ragged input set");
  }
  set.fill = [samples](std::size_t i, std::span<double> out) {
    std::copy(samples[i].data(), samples[i].data() + samples[i].size(), out.begin());
  };
  return set;
}

TrainResult train(const ModelSpec& spec, const InputSet& inputs,
                  std::span<const int> labels, const TrainConfig& config,
                  std::optional<Parameters> initial) {
  config.validate();
  spec.validate();
  if (inputs.count != labels.size()) {
    throw ShapeError("input count " + std::to_string(inputs.count) +
                     " differs from label count " + std::to_string(labels.size()));
  }
  if (inputs.count == 0) throw PreconditionError("training set is empty");
  if (inputs.sample_size != spec.input.size()) {
    throw ShapeError("samples of " + std::to_string(inputs.sample_size) +
                     " values for a model input of " + std::to_string(spec.input.size()));
  }

  TrainResult result;
  result.parameters = initial ? std::move(*initial) : initialize_parameters(spec, config.seed);
  check_parameters(spec, result.parameters);

  std::vector<Eigen::VectorXd> velocity;
  for (const Tensor& p : result.parameters) velocity.push_back(Eigen::VectorXd::Zero(p.size()));

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(inputs.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  Tape tape;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      batch_labels.clear();
      for (std::size_t i : idx) batch_labels.push_back(labels[i]);

      tape.clear();
      ForwardPass pass = forward(tape, spec, result.parameters, inputs.gather(idx),
                                 {.params_require_grad = true});
      Var loss = loss_bits(spec, pass.logits, batch_labels);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw DivergenceError(result.steps, "non-finite training loss");
      }
      tape.backward(loss);
      for (std::size_t p = 0; p < result.parameters.size(); ++p) {
        const Tensor g = pass.params[p].grad();
        velocity[p] = config.momentum * velocity[p] + g.values();
        result.parameters[p].values() -= config.learning_rate * velocity[p];
      }
      loss_sum += value * static_cast<double>(idx.size());
      seen += idx.size();
      ++result.steps;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(seen));
    if ((epoch + 1) % config.checkpoint_every == 0) {
      result.checkpoints.push_back(
          {result.parameters, result.steps, config.learning_rate, config.seed});
    }
  }
  return result;
}

Evaluation evaluate(const ModelSpec& spec, const Parameters& params,
                    const InputSet& inputs, std::span<const int> labels,
                    std::size_t batch_size) {
  if (inputs.count == 0 || inputs.count != labels.size()) {
    throw PreconditionError("evaluation set is empty or mislabelled");
  }
  Evaluation out;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < inputs.count; start += batch_size) {
    const std::size_t end = std::min(inputs.count, start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tape tape;
    ForwardPass pass = forward(tape, spec, params, inputs.gather(idx));
    const std::span<const int> ys = labels.subspan(start, end - start);
    out.loss_bits += loss_bits(spec, pass.logits, ys).value()[0] *
                     static_cast<double>(ys.size());
    const auto z = pass.logits.value().matrix(static_cast<Index>(ys.size()));
    for (std::size_t i = 0; i < ys.size(); ++i) {
      int pred = 0;
      if (spec.head == Head::softmax) {
        z.row(static_cast<Index>(i)).maxCoeff(&pred);
      } else {
        pred = z(static_cast<Index>(i), 0) >= 0.0 ? 1 : 0;
      }
      correct += pred == ys[i] ? 1 : 0;
    }
  }
  out.loss_bits /= static_cast<double>(inputs.count);
  out.accuracy = static_cast<double>(correct) / static_cast<double>(inputs.count);
  return out;
}

std::vector<int> predict(const ModelSpec& spec, const Parameters& params,
                         const Tensor& batch) {
  const RowMatrixXd z = logits(spec, params, batch);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Index i = 0; i < z.rows(); ++i) {
    int pred = 0;
    if (spec.head == Head::softmax) {
      z.row(i).maxCoeff(&pred);
    } else {
      pred = z(i, 0) >= 0.0 ? 1 : 0;
    }
    out[static_cast<std::size_t>(i)] = pred;
  }
  return out;
}

std::vector<std::size_t> GradientScope::resolve(const ModelSpec& spec) const {
  const auto infos = spec.parameters();
  std::vector<std::size_t> out;
  if (!layer_) {
    out.resize(infos.size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  if (is_final_dense()) {
    const std::size_t last = spec.layers.size() - 1;
    for (std::size_t i = 0; i < infos.size(); ++i) {
      if (infos[i].layer == last) out.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < infos.size(); ++i) {
      const std::string& n = infos[i].name;
      if (n.substr(0, n.find('.')) == *layer_) out.push_back(i);
    }
  }
  if (out.empty()) throw SpecError("gradient scope '" + *layer_ + "' matches no layer");
  return out;
}

Eigen::VectorXd per_example_gradient(const ModelSpec& spec, const Parameters& params,
                                     const Tensor& example, int label,
                                     const GradientScope& scope) {
  const auto which = scope.resolve(spec);
  Tensor batch = example;
  if (batch.rank() == 3 || batch.rank() == 1) {
    Tensor::Shape s = batch.shape();
    s.insert(s.begin(), 1);
    batch = batch.reshaped(std::move(s));
  }
  if (batch.dim(0) != 1) throw ShapeError("per-example gradient expects one example");
  Tape tape;
  ForwardPass pass = forward(tape, spec, params, std::move(batch),
                             {.params_require_grad = true});
  const int labels[] = {label};
  tape.backward(loss_bits(spec, pass.logits, labels));
  Index total = 0;
  for (std::size_t i : which) total += params[i].size();
  Eigen::VectorXd out(total);
  Index at = 0;
  for (std::size_t i : which) {
    const Tensor g = pass.params[i].grad();
    out.segment(at, g.size()) = g.values();
    at += g.size();
  }
  return out;
}

RowMatrixXd final_dense_gradients(const ModelSpec& spec, const Parameters& params,
                                  const Tensor& batch, std::span<const int> labels) {
  const Index n = batch.dim(0);
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ShapeError("final-dense gradients: label count mismatch");
  }
  Tape tape;
  ForwardPass pass = forward(tape, spec, params, batch);
  const auto a = pass.penultimate.value().matrix(n);
  const auto z = pass.logits.value().matrix(n);
  const Index k = z.cols();
  RowMatrixXd delta;
  if (spec.head == Head::softmax) {
    delta = softmax_rows(z);
    for (Index i = 0; i < n; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      if (y < 0 || y >= k) throw DomainError("label out of range");
      delta(i, y) -= 1.0;
    }
  } else {
    delta = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    for (Index i = 0; i < n; ++i) delta(i, 0) -= labels[static_cast<std::size_t>(i)];
  }
  delta /= std::numbers::ln2;
  const Index features = a.cols();
  RowMatrixXd out(n, features * k + k);
  for (Index i = 0; i < n; ++i) {
    for (Index f = 0; f < features; ++f) {
      out.row(i).segment(f * k, k) = a(i, f) * delta.row(i);
    }
    out.row(i).tail(k) = delta.row(i);
  }
  return out;
}

}  // namespace eds
