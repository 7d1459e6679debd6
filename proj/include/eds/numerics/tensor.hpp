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

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace eds {

using Index = Eigen::Index;
using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major tensor of doubles. The shape product always equals the
// number of stored values.
class Tensor {
 public:
  using Shape = std::vector<Index>;

  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Eigen::VectorXd values);
  Tensor(std::initializer_list<Index> shape) : Tensor(Shape(shape)) {}

  // Storage left uninitialised; the caller writes every value.
  static Tensor uninitialized(Shape shape);
  static Tensor scalar(double value);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const;
  Index size() const noexcept { return values_.size(); }

  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](Index i) { return values_[i]; }
  double operator[](Index i) const { return values_[i]; }

  // Row-major view as rows x (size / rows).
  Eigen::Map<RowMatrixXd> matrix(Index rows);
  Eigen::Map<const RowMatrixXd> matrix(Index rows) const;

  Tensor reshaped(Shape shape) const;
  bool all_finite() const { return values_.allFinite(); }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  Shape shape_;
  Eigen::VectorXd values_;
};

Index shape_product(const Tensor::Shape& shape);
std::string shape_string(const Tensor::Shape& shape);

}  // namespace eds
