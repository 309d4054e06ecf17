// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "vge/tape.hpp"
#include "vge/tensor.hpp"

namespace vge::ops {

/// Generic dispatcher keyed by primitive id string. Unknown ids throw
/// UnsupportedPrimitive. Ids: matmul, add, multiply, concat-last-axis,
/// gelu, softplus, softmax-last-axis, layernorm-last-axis, mean-reduce,
/// sum-reduce, gather-rows, scatter-add-rows, l2-norm, reshape.
Tensor apply_primitive(std::string_view kind, std::span<const Tensor> inputs,
                       const PrimAttrs& attrs = {});

Tensor apply(Prim kind, std::span<const Tensor> inputs, const PrimAttrs& attrs = {});

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise; also accepts a scalar b, or a rank-1 b matching the last
/// axis of a rank-2 a (bias broadcast).
Tensor add(const Tensor& a, const Tensor& b);

/// Elementwise; either operand may be scalar.
Tensor multiply(const Tensor& a, const Tensor& b);

/// Concatenate along the last axis; all other dims must agree.
Tensor concat_last_axis(std::span<const Tensor> parts);
Tensor concat_last_axis(const Tensor& a, const Tensor& b);
Tensor concat_last_axis(const Tensor& a, const Tensor& b, const Tensor& c);

/// Exact Gaussian-CDF GELU: x * Phi(x).
Tensor gelu(const Tensor& x);

/// ln(1 + e^x), overflow-safe.
Tensor softplus(const Tensor& x);

Tensor softmax_last_axis(const Tensor& x);

/// Pure normalization over the last axis (no affine), epsilon 1e-12.
Tensor layernorm_last_axis(const Tensor& x);

Tensor mean_reduce(const Tensor& x);  // -> scalar
Tensor sum_reduce(const Tensor& x);   // -> scalar

/// Select rows of a rank-2 tensor; indices may repeat.
Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> indices);

/// out[indices[e], :] += x[e, :], output has `rows` rows.
Tensor scatter_add_rows(const Tensor& x, std::span<const std::int64_t> indices,
                        std::int64_t rows);

/// Per-row Euclidean norm of a rank-2 tensor -> [rows, 1].
Tensor l2_norm(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

/// Rank-2 transpose.
Tensor transpose(const Tensor& x);

// Conveniences composed from the primitives above.
Tensor scale(const Tensor& x, double c);
Tensor neg(const Tensor& x);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// VJP dispatch for one recorded node: routes `out_adj` into the adjoint
/// buffers of the node's on-tape inputs.
void backward_node(const TapeNode& node, const std::vector<double>& out_adj,
                   std::vector<std::vector<double>>& adjoints);

}  // namespace vge::ops
