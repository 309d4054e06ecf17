// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vge/tensor.hpp"

namespace vge {

/// Primitive operation kinds understood by the engine.
enum class Prim : std::uint8_t {
  Leaf,
  Matmul,
  Add,
  Multiply,
  ConcatLastAxis,
  Gelu,
  Softplus,
  SoftmaxLastAxis,
  LayerNormLastAxis,
  MeanReduce,
  SumReduce,
  GatherRows,
  ScatterAddRows,
  L2Norm,
  Reshape,
  Transpose,
};

/// Out-of-band arguments for primitives that take them.
struct PrimAttrs {
  std::vector<std::int64_t> indices;  // gather-rows / scatter-add-rows
  std::int64_t rows = 0;              // scatter-add-rows output row count
  Shape shape;                        // reshape target
};

/// One recorded primitive application. Input values are copied into the
/// node so the backward sweep never chases tensors that may have gone out
/// of scope; inputs that were themselves on the tape also carry the node
/// id their adjoint flows back to.
struct TapeNode {
  struct Input {
    int node = -1;  // -1: constant w.r.t. this tape
    Shape shape;
    std::vector<double> value;
  };

  Prim op = Prim::Leaf;
  std::vector<Input> inputs;
  Shape shape;
  std::vector<double> value;
  std::vector<double> saved;  // op-specific (layernorm: per-row inv stddev)
  PrimAttrs attrs;
};

using GradientMap = std::map<std::string, Tensor>;

/// Reverse-mode gradient tape. Constructing a Tape makes it the active
/// tape for the current thread; destruction restores the previous one.
/// Primitives record onto the active tape whenever at least one input
/// participates in it. Nodes are stored in application order, which is a
/// topological order by construction, and backward() visits each node
/// exactly once in reverse.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a named leaf and returns a copy linked to this
  /// tape. Names must be unique per tape.
  Tensor watch(const std::string& name, const Tensor& value);

  /// Gradients of a scalar loss with respect to every watched leaf.
  /// Leaves the loss does not depend on get zero gradients.
  GradientMap backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t serial() const { return serial_; }

  static Tape* active();

  /// Internal recording hook used by the primitive implementations.
  Tensor record(Prim op, std::vector<TapeNode::Input> inputs, Shape shape,
                std::vector<double> value, std::vector<double> saved,
                PrimAttrs attrs);

  const TapeNode& node_at(std::size_t i) const { return nodes_[i]; }

 private:
  std::vector<TapeNode> nodes_;
  std::vector<std::pair<std::string, int>> watched_;
  std::uint64_t serial_;
  Tape* previous_ = nullptr;
};

}  // namespace vge
