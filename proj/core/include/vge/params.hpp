// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vge/rng.hpp"
#include "vge/tape.hpp"
#include "vge/tensor.hpp"

namespace vge {

/// Named trainable tensor plus its Adam moment accumulators.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor m;  // first moment
  Tensor v;  // second moment
};

/// Ordered collection of parameters; names are unique and iteration order
/// is registration order, which fixes the update order for determinism.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::int64_t total_elements() const;

  /// Flatten every parameter into one [total, 1] column (registration
  /// order); unpack writes such a column back. Used by the whole-model
  /// finite-difference harness.
  Tensor pack() const;
  void unpack(const Tensor& flat);

  /// name -> (offset, length) into the packed column.
  std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> layout() const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct StepReport {
  std::vector<std::string> skipped;  // parameters with no incoming gradient
};

/// Deterministic Adam. Parameters without a gradient entry are skipped
/// and reported, not touched.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}

  StepReport step(ParameterStore& params, const GradientMap& grads);

  std::int64_t step_count() const { return step_count_; }
  void set_step_count(std::int64_t t) { step_count_ = t; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_count_ = 0;
};

// Deterministic initializers.
Tensor xavier_init(std::int64_t rows, std::int64_t cols, RngStream& rng);

/// `count` mutually orthonormal rows of width `dim` (count <= dim).
Tensor orthogonal_rows(std::int64_t count, std::int64_t dim, RngStream& rng);

/// Parameter tensors bound for one forward pass: watched leaves when a
/// tape is active, detached copies otherwise. Gradient checks can also
/// assemble a BoundParams from slices of a packed column to differentiate
/// through every weight at once.
class BoundParams {
 public:
  BoundParams() = default;

  /// Bind every parameter of the store; watches them on the active tape
  /// when one exists.
  static BoundParams bind(const ParameterStore& store);

  void set(const std::string& name, Tensor t);
  const Tensor& operator[](const std::string& name) const;
  bool contains(const std::string& name) const;

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace vge
