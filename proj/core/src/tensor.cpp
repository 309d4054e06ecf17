// SPDX-License-Identifier: Apache-2.0
#include "vge/tensor.hpp"

#include <cmath>
#include <sstream>

#include "vge/errors.hpp"

namespace vge {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out << ',';
    out << s[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape_));
  }
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size())) {
    throw ShapeError("shape " + shape_str(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::zeros(Shape shape) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::from_vector(std::vector<double> values) {
  Shape s{static_cast<std::int64_t>(values.size())};
  return Tensor(std::move(s), std::move(values));
}

Tensor Tensor::from_matrix(std::int64_t rows, std::int64_t cols,
                           std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() requires a scalar, got shape " + shape_str(shape_));
  }
  return data_[0];
}

namespace {
std::size_t flat_index(const Shape& shape, std::initializer_list<std::int64_t> idx) {
  if (idx.size() != shape.size()) {
    throw ShapeError("index rank " + std::to_string(idx.size()) +
                     " does not match tensor shape " + shape_str(shape));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : idx) {
    if (i < 0 || i >= shape[axis]) {
      throw ContractError("index out of range at axis " + std::to_string(axis));
    }
    flat = flat * static_cast<std::size_t>(shape[axis]) + static_cast<std::size_t>(i);
    ++axis;
  }
  return flat;
}
}  // namespace

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
  return data_[flat_index(shape_, idx)];
}

double& Tensor::at(std::initializer_list<std::int64_t> idx) {
  return data_[flat_index(shape_, idx)];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::detached() const { return Tensor(shape_, data_); }

}  // namespace vge
