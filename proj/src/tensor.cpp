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

#include "bmnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bmnet/error.hpp"

namespace bmnet {

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("zero extent in shape " + shape_to_string(shape));
  }
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Split `a` into [outer, axis, inner] around the reduction axis.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
  Shape reduced;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_to_string(shape));
  }
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (d != axis) s.reduced.push_back(shape[d]);
  }
  if (s.reduced.empty()) s.reduced.push_back(1);
  return s;
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_volume(const Shape& shape) {
  std::size_t v = 1;
  for (auto e : shape) v *= e;
  return v;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_volume(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_volume(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_to_string(shape_) + " holds " +
                     std::to_string(shape_volume(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Shape Tensor::strides() const {
  Shape s(shape_.size(), 1);
  for (std::size_t d = shape_.size(); d-- > 1;) s[d - 1] = s[d] * shape_[d];
  return s;
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match tensor rank " +
                     std::to_string(shape_.size()));
  }
  std::size_t off = 0;
  for (std::size_t d = 0; d < index.size(); ++d) {
    if (index[d] >= shape_[d]) throw ShapeError("index out of range");
    off = off * shape_[d] + index[d];
  }
  return off;
}

std::vector<std::size_t> Tensor::unravel(std::size_t off) const {
  if (off >= data_.size()) throw ShapeError("offset out of range");
  std::vector<std::size_t> idx(shape_.size());
  for (std::size_t d = shape_.size(); d-- > 0;) {
    idx[d] = off % shape_[d];
    off /= shape_[d];
  }
  return idx;
}

double& Tensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

Tensor Tensor::reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }

Tensor Tensor::reshaped(Shape shape) && {
  return Tensor(std::move(shape), std::move(data_));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor zeros(const Shape& shape) { return Tensor(shape); }

Tensor full(const Shape& shape, double value) {
  Tensor t(shape);
  t.fill(value);
  return t;
}

Tensor zip(const Tensor& a, const Tensor& b,
           const std::function<double(double, double)>& fn) {
  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
    return out;
  }
  if (is_suffix(b.shape(), a.shape())) {
    Tensor out(a.shape());
    const std::size_t n = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i % n]);
    return out;
  }
  if (is_suffix(a.shape(), b.shape())) {
    Tensor out(b.shape());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = fn(a[i % n], b[i]);
    return out;
  }
  throw ShapeError("incompatible shapes " + shape_to_string(a.shape()) + " and " +
                   shape_to_string(b.shape()));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x * y; });
}
Tensor maximum(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return std::max(x, y); });
}

Tensor map(const Tensor& a, const std::function<double(double)>& fn) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

Tensor exp(const Tensor& a) {
  return map(a, [](double x) { return std::exp(x); });
}

Tensor ln(const Tensor& a) {
  return map(a, [](double x) {
    if (!(x > 0.0)) {
      throw DomainError("ln of non-positive value " + std::to_string(x));
    }
    return std::log(x);
  });
}

Tensor relu(const Tensor& a) {
  return map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor reduce_max(const Tensor& a, std::size_t axis) {
  const auto s = split_axis(a.shape(), axis);
  Tensor out(s.reduced, std::vector<double>(s.outer * s.inner,
                                            -std::numeric_limits<double>::infinity()));
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.extent; ++k)
      for (std::size_t i = 0; i < s.inner; ++i) {
        double& dst = out[o * s.inner + i];
        dst = std::max(dst, a[(o * s.extent + k) * s.inner + i]);
      }
  return out;
}

Tensor reduce_sum(const Tensor& a, std::size_t axis) {
  const auto s = split_axis(a.shape(), axis);
  Tensor out(s.reduced);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.extent; ++k)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += a[(o * s.extent + k) * s.inner + i];
  return out;
}

std::vector<std::size_t> argmax(const Tensor& a, std::size_t axis) {
  const auto s = split_axis(a.shape(), axis);
  std::vector<std::size_t> out(s.outer * s.inner, 0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = 0;
      double best_v = a[o * s.extent * s.inner + i];
      for (std::size_t k = 1; k < s.extent; ++k) {
        const double v = a[(o * s.extent + k) * s.inner + i];
        if (v > best_v) {
          best_v = v;
          best = k;
        }
      }
      out[o * s.inner + i] = best;
    }
  return out;
}

}  // namespace bmnet
