// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vge {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense row-major tensor of 64-bit floats. A tensor may additionally be
/// linked into the gradient tape that was active when it was produced;
/// node() and tape_serial() identify that link. Detached tensors have
/// node() == -1.
class Tensor {
 public:
  Tensor() = default;  // shape [0], no elements
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from_vector(std::vector<double> values);  // shape [n]
  static Tensor from_matrix(std::int64_t rows, std::int64_t cols,
                            std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t dim(std::size_t i) const { return shape_[i]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Scalar extraction; requires numel() == 1.
  double item() const;

  double at(std::initializer_list<std::int64_t> idx) const;
  double& at(std::initializer_list<std::int64_t> idx);

  bool all_finite() const;

  bool on_tape() const { return node_ >= 0; }
  int node() const { return node_; }
  std::uint64_t tape_serial() const { return tape_serial_; }

  /// Copy of the values with no tape link.
  Tensor detached() const;

 private:
  Shape shape_{0};
  std::vector<double> data_;
  int node_ = -1;
  std::uint64_t tape_serial_ = 0;

  friend class Tape;
};

}  // namespace vge
