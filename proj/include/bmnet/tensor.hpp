// Copyright 2026 The bmnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bmnet {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Element (i0, i1, ..., ik) lives at offset sum_d i_d * stride_d where
/// stride_k = 1 and stride_d = stride_{d+1} * shape[d+1].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t offset) { return data_[offset]; }
  double operator[](std::size_t offset) const { return data_[offset]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  Shape strides() const;
  std::size_t offset(std::span<const std::size_t> index) const;
  std::vector<std::size_t> unravel(std::size_t offset) const;

  /// Same data viewed under a new shape of equal volume.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  void fill(double value);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor zeros(const Shape& shape);
Tensor full(const Shape& shape, double value);

// Elementwise binary ops. Operands must have equal shapes, or the shape of
// one must equal a trailing suffix of the other's shape; the shorter operand
// is then repeated along the leading axes of the longer one ([B,Q] + [Q]).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor zip(const Tensor& a, const Tensor& b,
           const std::function<double(double, double)>& fn);

Tensor map(const Tensor& a, const std::function<double(double)>& fn);
Tensor exp(const Tensor& a);
/// Natural log. Throws DomainError for x <= 0; callers that need ln 0 use
/// the log-domain sentinel instead.
Tensor ln(const Tensor& a);
Tensor relu(const Tensor& a);

// Reductions remove `axis` from the shape. A rank-1 input reduces to a
// rank-1 tensor of extent 1.
Tensor reduce_max(const Tensor& a, std::size_t axis);
Tensor reduce_sum(const Tensor& a, std::size_t axis);
/// Index of the first maximum along `axis` (lowest index wins ties).
std::vector<std::size_t> argmax(const Tensor& a, std::size_t axis);

}  // namespace bmnet
