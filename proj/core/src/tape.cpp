// SPDX-License-Identifier: Apache-2.0
#include "vge/tape.hpp"

#include <atomic>

#include "vge/errors.hpp"
#include "vge/ops.hpp"

namespace vge {
namespace {

thread_local Tape* t_active = nullptr;
std::atomic<std::uint64_t> g_tape_serial{1};

}  // namespace

Tape::Tape() : serial_(g_tape_serial.fetch_add(1)) {
  previous_ = t_active;
  t_active = this;
}

Tape::~Tape() { t_active = previous_; }

Tape* Tape::active() { return t_active; }

Tensor Tape::watch(const std::string& name, const Tensor& value) {
  for (const auto& [n, _] : watched_) {
    if (n == name) throw ContractError("duplicate watched name: " + name);
  }
  Tensor leaf = value.detached();
  leaf.node_ = static_cast<int>(nodes_.size());
  leaf.tape_serial_ = serial_;
  TapeNode node;
  node.op = Prim::Leaf;
  node.shape = leaf.shape();
  node.value.assign(leaf.data().begin(), leaf.data().end());
  nodes_.push_back(std::move(node));
  watched_.emplace_back(name, leaf.node_);
  return leaf;
}

Tensor Tape::record(Prim op, std::vector<TapeNode::Input> inputs, Shape shape,
                    std::vector<double> value, std::vector<double> saved,
                    PrimAttrs attrs) {
  TapeNode node;
  node.op = op;
  node.inputs = std::move(inputs);
  node.shape = shape;
  node.value = value;
  node.saved = std::move(saved);
  node.attrs = std::move(attrs);
  nodes_.push_back(std::move(node));

  Tensor out(std::move(shape), std::move(value));
  out.node_ = static_cast<int>(nodes_.size()) - 1;
  out.tape_serial_ = serial_;
  return out;
}

GradientMap Tape::backward(const Tensor& loss) const {
  if (loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(loss.shape()));
  }
  if (!loss.on_tape() || loss.tape_serial() != serial_) {
    throw ContractError("loss is not on the active tape");
  }

  std::vector<std::vector<double>> adjoints(nodes_.size());
  adjoints[static_cast<std::size_t>(loss.node())].assign(1, 1.0);

  // Nodes are appended in application order, so a single reverse sweep
  // visits each node once with its full adjoint accumulated.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const TapeNode& node = nodes_[i];
    if (adjoints[i].empty() || node.op == Prim::Leaf) continue;
    ops::backward_node(node, adjoints[i], adjoints);
  }

  GradientMap grads;
  for (const auto& [name, node_id] : watched_) {
    const TapeNode& leaf = nodes_[static_cast<std::size_t>(node_id)];
    auto& adj = adjoints[static_cast<std::size_t>(node_id)];
    if (adj.empty()) adj.assign(leaf.value.size(), 0.0);
    grads.emplace(name, Tensor(leaf.shape, adj));
  }
  return grads;
}

}  // namespace vge
