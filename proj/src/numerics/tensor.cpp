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

#include "eds/numerics/tensor.hpp"

#include <numeric>
#include <sstream>

#include "eds/errors.hpp"

namespace eds {

Index shape_product(const Tensor::Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_string(const Tensor::Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)),
      values_(Eigen::VectorXd::Zero(shape_product(shape_))) {}

Tensor::Tensor(Shape shape, Eigen::VectorXd values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not hold " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::uninitialized(Shape shape) {
  const Index n = shape_product(shape);
  return Tensor(std::move(shape), Eigen::VectorXd(n));
}

Tensor Tensor::scalar(double value) {
  return Tensor({1}, Eigen::VectorXd::Constant(1, value));
}

Tensor Tensor::filled(Shape shape, double value) {
  const Index n = shape_product(shape);
  return Tensor(std::move(shape), Eigen::VectorXd::Constant(n, value));
}

Index Tensor::dim(Index axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

Eigen::Map<RowMatrixXd> Tensor::matrix(Index rows) {
  if (rows <= 0 || size() % rows != 0) {
    throw ShapeError("cannot view " + shape_string(shape_) + " with " +
                     std::to_string(rows) + " rows");
  }
  return {values_.data(), rows, size() / rows};
}

Eigen::Map<const RowMatrixXd> Tensor::matrix(Index rows) const {
  if (rows <= 0 || size() % rows != 0) {
    throw ShapeError("cannot view " + shape_string(shape_) + " with " +
                     std::to_string(rows) + " rows");
  }
  return {values_.data(), rows, size() / rows};
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_product(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                     shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

}  // namespace eds
