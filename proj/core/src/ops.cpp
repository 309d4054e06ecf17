// SPDX-License-Identifier: Apache-2.0
#include "vge/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vge/errors.hpp"

namespace vge::ops {
namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gauss_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double softplus_val(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool is_scalar(const Tensor& t) { return t.numel() == 1; }

std::int64_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                   " and " + shape_str(b.shape()));
}

/// Record the result on the active tape when any input participates in
/// it, otherwise return it detached.
Tensor finish(Prim op, std::span<const Tensor> inputs, Shape shape,
              std::vector<double> value, std::vector<double> saved = {},
              PrimAttrs attrs = {}) {
  Tape* tape = Tape::active();
  bool participates = false;
  if (tape) {
    for (const auto& t : inputs) {
      if (t.on_tape() && t.tape_serial() == tape->serial()) {
        participates = true;
        break;
      }
    }
  }
  if (!participates) return Tensor(std::move(shape), std::move(value));

  std::vector<TapeNode::Input> node_inputs;
  node_inputs.reserve(inputs.size());
  for (const auto& t : inputs) {
    TapeNode::Input in;
    in.node = (t.on_tape() && t.tape_serial() == tape->serial()) ? t.node() : -1;
    in.shape = t.shape();
    in.value.assign(t.data().begin(), t.data().end());
    node_inputs.push_back(std::move(in));
  }
  return tape->record(op, std::move(node_inputs), std::move(shape), std::move(value),
                      std::move(saved), std::move(attrs));
}

void add_into(std::vector<double>& dst, std::size_t n, const double* src) {
  if (dst.empty()) dst.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_fail("matmul", a, b);
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
  const auto* pa = a.data().data();
  const auto* pb = b.data().data();
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double av = pa[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = pb + kk * n;
      double* orow = out.data() + i * n;
      for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  const Tensor ins[] = {a, b};
  return finish(Prim::Matmul, ins, Shape{m, n}, std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
  std::vector<double> out;
  Shape shape;
  if (a.shape() == b.shape()) {
    shape = a.shape();
    out.resize(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  } else if (is_scalar(b)) {
    shape = a.shape();
    const double s = b.data()[0];
    out.resize(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + s;
  } else if (is_scalar(a)) {
    shape = b.shape();
    const double s = a.data()[0];
    out.resize(b.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s + b.data()[i];
  } else if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) {
    shape = a.shape();
    const std::int64_t rows = a.dim(0), cols = a.dim(1);
    out.resize(a.data().size());
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c)
        out[static_cast<std::size_t>(r * cols + c)] =
            a.data()[static_cast<std::size_t>(r * cols + c)] + b.data()[static_cast<std::size_t>(c)];
  } else {
    shape_fail("add", a, b);
  }
  const Tensor ins[] = {a, b};
  return finish(Prim::Add, ins, std::move(shape), std::move(out));
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  std::vector<double> out;
  Shape shape;
  if (a.shape() == b.shape()) {
    shape = a.shape();
    out.resize(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  } else if (is_scalar(b)) {
    shape = a.shape();
    const double s = b.data()[0];
    out.resize(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  } else if (is_scalar(a)) {
    shape = b.shape();
    const double s = a.data()[0];
    out.resize(b.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * b.data()[i];
  } else {
    shape_fail("multiply", a, b);
  }
  const Tensor ins[] = {a, b};
  return finish(Prim::Multiply, ins, std::move(shape), std::move(out));
}

Tensor concat_last_axis(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat-last-axis needs at least one input");
  const auto& first = parts.front().shape();
  std::int64_t total_last = 0;
  for (const auto& t : parts) {
    if (t.rank() != first.size() || t.rank() == 0) shape_fail("concat-last-axis", parts.front(), t);
    for (std::size_t d = 0; d + 1 < first.size(); ++d)
      if (t.shape()[d] != first[d]) shape_fail("concat-last-axis", parts.front(), t);
    total_last += last_dim(t.shape());
  }
  Shape shape = first;
  shape.back() = total_last;
  const std::int64_t rows = shape_numel(shape) / std::max<std::int64_t>(total_last, 1);
  std::vector<double> out(static_cast<std::size_t>(rows * total_last));
  std::int64_t col_off = 0;
  for (const auto& t : parts) {
    const std::int64_t cols = last_dim(t.shape());
    for (std::int64_t r = 0; r < rows; ++r)
      std::copy_n(t.data().data() + r * cols, cols,
                  out.data() + r * total_last + col_off);
    col_off += cols;
  }
  return finish(Prim::ConcatLastAxis, parts, std::move(shape), std::move(out));
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b) {
  const Tensor ins[] = {a, b};
  return concat_last_axis(std::span<const Tensor>(ins));
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b, const Tensor& c) {
  const Tensor ins[] = {a, b, c};
  return concat_last_axis(std::span<const Tensor>(ins));
}

Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    out[i] = v * gauss_cdf(v);
  }
  const Tensor ins[] = {x};
  return finish(Prim::Gelu, ins, x.shape(), std::move(out));
}

Tensor softplus(const Tensor& x) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus_val(x.data()[i]);
  const Tensor ins[] = {x};
  return finish(Prim::Softplus, ins, x.shape(), std::move(out));
}

Tensor softmax_last_axis(const Tensor& x) {
  if (x.rank() == 0) throw ShapeError("softmax-last-axis: rank-0 input");
  const std::int64_t cols = last_dim(x.shape());
  const std::int64_t rows = x.numel() / cols;
  std::vector<double> out(x.data().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* row = x.data().data() + r * cols;
    double* orow = out.data() + r * cols;
    double mx = row[0];
    for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    double sum = 0;
    for (std::int64_t c = 0; c < cols; ++c) {
      orow[c] = std::exp(row[c] - mx);
      sum += orow[c];
    }
    for (std::int64_t c = 0; c < cols; ++c) orow[c] /= sum;
  }
  const Tensor ins[] = {x};
  return finish(Prim::SoftmaxLastAxis, ins, x.shape(), std::move(out));
}

Tensor layernorm_last_axis(const Tensor& x) {
  if (x.rank() == 0) throw ShapeError("layernorm-last-axis: rank-0 input");
  const std::int64_t cols = last_dim(x.shape());
  const std::int64_t rows = x.numel() / cols;
  std::vector<double> out(x.data().size());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* row = x.data().data() + r * cols;
    double mean = 0;
    for (std::int64_t c = 0; c < cols; ++c) mean += row[c];
    mean /= static_cast<double>(cols);
    double var = 0;
    for (std::int64_t c = 0; c < cols; ++c) {
      const double d = row[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[static_cast<std::size_t>(r)] = inv;
    for (std::int64_t c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(r * cols + c)] = (row[c] - mean) * inv;
  }
  const Tensor ins[] = {x};
  return finish(Prim::LayerNormLastAxis, ins, x.shape(), std::move(out), std::move(inv_std));
}

Tensor mean_reduce(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean-reduce: empty input");
  double sum = 0;
  for (double v : x.data()) sum += v;
  const Tensor ins[] = {x};
  return finish(Prim::MeanReduce, ins, Shape{}, {sum / static_cast<double>(x.numel())});
}

Tensor sum_reduce(const Tensor& x) {
  double sum = 0;
  for (double v : x.data()) sum += v;
  const Tensor ins[] = {x};
  return finish(Prim::SumReduce, ins, Shape{}, {sum});
}

Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> indices) {
  if (x.rank() != 2) throw ShapeError("gather-rows: need rank-2 input, got " + shape_str(x.shape()));
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  for (auto i : indices) {
    if (i < 0 || i >= rows)
      throw ContractError("gather-rows: index " + std::to_string(i) + " out of range [0," +
                          std::to_string(rows) + ")");
  }
  std::vector<double> out(indices.size() * static_cast<std::size_t>(cols));
  for (std::size_t e = 0; e < indices.size(); ++e)
    std::copy_n(x.data().data() + indices[e] * cols, cols,
                out.data() + static_cast<std::int64_t>(e) * cols);
  PrimAttrs attrs;
  attrs.indices.assign(indices.begin(), indices.end());
  const Tensor ins[] = {x};
  return finish(Prim::GatherRows, ins, Shape{static_cast<std::int64_t>(indices.size()), cols},
                std::move(out), {}, std::move(attrs));
}

Tensor scatter_add_rows(const Tensor& x, std::span<const std::int64_t> indices,
                        std::int64_t rows) {
  if (x.rank() != 2) throw ShapeError("scatter-add-rows: need rank-2 input, got " + shape_str(x.shape()));
  if (static_cast<std::int64_t>(indices.size()) != x.dim(0))
    throw ShapeError("scatter-add-rows: " + std::to_string(indices.size()) + " indices for " +
                     std::to_string(x.dim(0)) + " rows");
  for (auto i : indices) {
    if (i < 0 || i >= rows)
      throw ContractError("scatter-add-rows: index " + std::to_string(i) + " out of range [0," +
                          std::to_string(rows) + ")");
  }
  const std::int64_t cols = x.dim(1);
  std::vector<double> out(static_cast<std::size_t>(rows * cols), 0.0);
  for (std::size_t e = 0; e < indices.size(); ++e) {
    const double* src = x.data().data() + static_cast<std::int64_t>(e) * cols;
    double* dst = out.data() + indices[e] * cols;
    for (std::int64_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  PrimAttrs attrs;
  attrs.indices.assign(indices.begin(), indices.end());
  attrs.rows = rows;
  const Tensor ins[] = {x};
  return finish(Prim::ScatterAddRows, ins, Shape{rows, cols}, std::move(out), {},
                std::move(attrs));
}

Tensor l2_norm(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("l2-norm: need rank-2 input, got " + shape_str(x.shape()));
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    double s = 0;
    for (std::int64_t c = 0; c < cols; ++c) {
      const double v = x.data()[static_cast<std::size_t>(r * cols + c)];
      s += v * v;
    }
    out[static_cast<std::size_t>(r)] = std::sqrt(s);
  }
  const Tensor ins[] = {x};
  return finish(Prim::L2Norm, ins, Shape{rows, 1}, std::move(out));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape) +
                     " changes element count");
  std::vector<double> out(x.data().begin(), x.data().end());
  const Tensor ins[] = {x};
  return finish(Prim::Reshape, ins, std::move(shape), std::move(out));
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose: need rank-2 input, got " + shape_str(x.shape()));
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(x.data().size());
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(c * rows + r)] = x.data()[static_cast<std::size_t>(r * cols + c)];
  const Tensor ins[] = {x};
  return finish(Prim::Transpose, ins, Shape{cols, rows}, std::move(out));
}

Tensor scale(const Tensor& x, double c) { return multiply(x, Tensor::scalar(c)); }

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add(matmul(x, w), b);
}

Tensor apply(Prim kind, std::span<const Tensor> inputs, const PrimAttrs& attrs) {
  auto arity = [&](std::size_t n) {
    if (inputs.size() != n)
      throw ContractError("primitive expected " + std::to_string(n) + " inputs, got " +
                          std::to_string(inputs.size()));
  };
  switch (kind) {
    case Prim::Matmul: arity(2); return matmul(inputs[0], inputs[1]);
    case Prim::Add: arity(2); return add(inputs[0], inputs[1]);
    case Prim::Multiply: arity(2); return multiply(inputs[0], inputs[1]);
    case Prim::ConcatLastAxis: return concat_last_axis(inputs);
    case Prim::Gelu: arity(1); return gelu(inputs[0]);
    case Prim::Softplus: arity(1); return softplus(inputs[0]);
    case Prim::SoftmaxLastAxis: arity(1); return softmax_last_axis(inputs[0]);
    case Prim::LayerNormLastAxis: arity(1); return layernorm_last_axis(inputs[0]);
    case Prim::MeanReduce: arity(1); return mean_reduce(inputs[0]);
    case Prim::SumReduce: arity(1); return sum_reduce(inputs[0]);
    case Prim::GatherRows: arity(1); return gather_rows(inputs[0], attrs.indices);
    case Prim::ScatterAddRows: arity(1); return scatter_add_rows(inputs[0], attrs.indices, attrs.rows);
    case Prim::L2Norm: arity(1); return l2_norm(inputs[0]);
    case Prim::Reshape: arity(1); return reshape(inputs[0], attrs.shape);
    case Prim::Transpose: arity(1); return transpose(inputs[0]);
    case Prim::Leaf: break;
  }
  throw UnsupportedPrimitive("primitive kind not applicable");
}

Tensor apply_primitive(std::string_view kind, std::span<const Tensor> inputs,
                       const PrimAttrs& attrs) {
  static const std::pair<std::string_view, Prim> table[] = {
      {"matmul", Prim::Matmul},
      {"add", Prim::Add},
      {"multiply", Prim::Multiply},
      {"concat-last-axis", Prim::ConcatLastAxis},
      {"gelu", Prim::Gelu},
      {"softplus", Prim::Softplus},
      {"softmax-last-axis", Prim::SoftmaxLastAxis},
      {"layernorm-last-axis", Prim::LayerNormLastAxis},
      {"mean-reduce", Prim::MeanReduce},
      {"sum-reduce", Prim::SumReduce},
      {"gather-rows", Prim::GatherRows},
      {"scatter-add-rows", Prim::ScatterAddRows},
      {"l2-norm", Prim::L2Norm},
      {"reshape", Prim::Reshape},
      {"transpose", Prim::Transpose},
  };
  for (const auto& [name, prim] : table) {
    if (name == kind) return apply(prim, inputs, attrs);
  }
  throw UnsupportedPrimitive("unknown primitive: " + std::string(kind));
}

void backward_node(const TapeNode& node, const std::vector<double>& out_adj,
                   std::vector<std::vector<double>>& adjoints) {
  auto sink = [&](std::size_t input_idx) -> std::vector<double>* {
    const int nid = node.inputs[input_idx].node;
    if (nid < 0) return nullptr;
    auto& adj = adjoints[static_cast<std::size_t>(nid)];
    if (adj.empty()) adj.assign(node.inputs[input_idx].value.size(), 0.0);
    return &adj;
  };

  switch (node.op) {
    case Prim::Leaf:
      return;

    case Prim::Matmul: {
      const auto& a = node.inputs[0];
      const auto& b = node.inputs[1];
      const std::int64_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
      if (auto* da = sink(0)) {
        for (std::int64_t i = 0; i < m; ++i)
          for (std::int64_t j = 0; j < n; ++j) {
            const double g = out_adj[static_cast<std::size_t>(i * n + j)];
            if (g == 0.0) continue;
            for (std::int64_t kk = 0; kk < k; ++kk)
              (*da)[static_cast<std::size_t>(i * k + kk)] += g * b.value[static_cast<std::size_t>(kk * n + j)];
          }
      }
      if (auto* db = sink(1)) {
        for (std::int64_t i = 0; i < m; ++i)
          for (std::int64_t kk = 0; kk < k; ++kk) {
            const double av = a.value[static_cast<std::size_t>(i * k + kk)];
            if (av == 0.0) continue;
            for (std::int64_t j = 0; j < n; ++j)
              (*db)[static_cast<std::size_t>(kk * n + j)] += av * out_adj[static_cast<std::size_t>(i * n + j)];
          }
      }
      return;
    }

    case Prim::Add: {
      const auto& a = node.inputs[0];
      const auto& b = node.inputs[1];
      if (a.shape == b.shape) {
        if (auto* da = sink(0)) add_into(*da, out_adj.size(), out_adj.data());
        if (auto* db = sink(1)) add_into(*db, out_adj.size(), out_adj.data());
      } else if (b.value.size() == 1 && a.value.size() != 1) {
        if (auto* da = sink(0)) add_into(*da, out_adj.size(), out_adj.data());
        if (auto* db = sink(1)) {
          double s = 0;
          for (double g : out_adj) s += g;
          (*db)[0] += s;
        }
      } else if (a.value.size() == 1 && b.value.size() != 1) {
        if (auto* db = sink(1)) add_into(*db, out_adj.size(), out_adj.data());
        if (auto* da = sink(0)) {
          double s = 0;
          for (double g : out_adj) s += g;
          (*da)[0] += s;
        }
      } else if (a.value.size() == 1 && b.value.size() == 1) {
        if (auto* da = sink(0)) (*da)[0] += out_adj[0];
        if (auto* db = sink(1)) (*db)[0] += out_adj[0];
      } else {  // bias broadcast over rows
        const std::int64_t rows = a.shape[0], cols = a.shape[1];
        if (auto* da = sink(0)) add_into(*da, out_adj.size(), out_adj.data());
        if (auto* db = sink(1)) {
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < cols; ++c)
              (*db)[static_cast<std::size_t>(c)] += out_adj[static_cast<std::size_t>(r * cols + c)];
        }
      }
      return;
    }

    case Prim::Multiply: {
      const auto& a = node.inputs[0];
      const auto& b = node.inputs[1];
      if (a.shape == b.shape) {
        if (auto* da = sink(0))
          for (std::size_t i = 0; i < out_adj.size(); ++i) (*da)[i] += out_adj[i] * b.value[i];
        if (auto* db = sink(1))
          for (std::size_t i = 0; i < out_adj.size(); ++i) (*db)[i] += out_adj[i] * a.value[i];
      } else if (b.value.size() == 1) {
        const double s = b.value[0];
        if (auto* da = sink(0))
          for (std::size_t i = 0; i < out_adj.size(); ++i) (*da)[i] += out_adj[i] * s;
        if (auto* db = sink(1)) {
          double acc = 0;
          for (std::size_t i = 0; i < out_adj.size(); ++i) acc += out_adj[i] * a.value[i];
          (*db)[0] += acc;
        }
      } else {  // a scalar
        const double s = a.value[0];
        if (auto* db = sink(1))
          for (std::size_t i = 0; i < out_adj.size(); ++i) (*db)[i] += out_adj[i] * s;
        if (auto* da = sink(0)) {
          double acc = 0;
          for (std::size_t i = 0; i < out_adj.size(); ++i) acc += out_adj[i] * b.value[i];
          (*da)[0] += acc;
        }
      }
      return;
    }

    case Prim::ConcatLastAxis: {
      const std::int64_t total_last = node.shape.back();
      const std::int64_t rows = shape_numel(node.shape) / total_last;
      std::int64_t col_off = 0;
      for (std::size_t p = 0; p < node.inputs.size(); ++p) {
        const std::int64_t cols = node.inputs[p].shape.back();
        if (auto* dp = sink(p)) {
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < cols; ++c)
              (*dp)[static_cast<std::size_t>(r * cols + c)] +=
                  out_adj[static_cast<std::size_t>(r * total_last + col_off + c)];
        }
        col_off += cols;
      }
      return;
    }

    case Prim::Gelu: {
      if (auto* da = sink(0)) {
        const auto& x = node.inputs[0].value;
        for (std::size_t i = 0; i < out_adj.size(); ++i)
          (*da)[i] += out_adj[i] * (gauss_cdf(x[i]) + x[i] * gauss_pdf(x[i]));
      }
      return;
    }

    case Prim::Softplus: {
      if (auto* da = sink(0)) {
        const auto& x = node.inputs[0].value;
        for (std::size_t i = 0; i < out_adj.size(); ++i)
          (*da)[i] += out_adj[i] * sigmoid(x[i]);
      }
      return;
    }

    case Prim::SoftmaxLastAxis: {
      if (auto* da = sink(0)) {
        const std::int64_t cols = node.shape.back();
        const std::int64_t rows = shape_numel(node.shape) / cols;
        for (std::int64_t r = 0; r < rows; ++r) {
          const double* y = node.value.data() + r * cols;
          const double* dy = out_adj.data() + r * cols;
          double dot = 0;
          for (std::int64_t c = 0; c < cols; ++c) dot += dy[c] * y[c];
          for (std::int64_t c = 0; c < cols; ++c)
            (*da)[static_cast<std::size_t>(r * cols + c)] += y[c] * (dy[c] - dot);
        }
      }
      return;
    }

    case Prim::LayerNormLastAxis: {
      if (auto* da = sink(0)) {
        const std::int64_t cols = node.shape.back();
        const std::int64_t rows = shape_numel(node.shape) / cols;
        for (std::int64_t r = 0; r < rows; ++r) {
          const double inv = node.saved[static_cast<std::size_t>(r)];
          const double* xh = node.value.data() + r * cols;
          const double* dy = out_adj.data() + r * cols;
          double mean_dy = 0, mean_dy_xh = 0;
          for (std::int64_t c = 0; c < cols; ++c) {
            mean_dy += dy[c];
            mean_dy_xh += dy[c] * xh[c];
          }
          mean_dy /= static_cast<double>(cols);
          mean_dy_xh /= static_cast<double>(cols);
          for (std::int64_t c = 0; c < cols; ++c)
            (*da)[static_cast<std::size_t>(r * cols + c)] +=
                inv * (dy[c] - mean_dy - xh[c] * mean_dy_xh);
        }
      }
      return;
    }

    case Prim::MeanReduce: {
      if (auto* da = sink(0)) {
        const double g = out_adj[0] / static_cast<double>(node.inputs[0].value.size());
        for (auto& v : *da) v += g;
      }
      return;
    }

    case Prim::SumReduce: {
      if (auto* da = sink(0)) {
        const double g = out_adj[0];
        for (auto& v : *da) v += g;
      }
      return;
    }

    case Prim::GatherRows: {
      if (auto* da = sink(0)) {
        const std::int64_t cols = node.shape.back();
        for (std::size_t e = 0; e < node.attrs.indices.size(); ++e) {
          const std::int64_t row = node.attrs.indices[e];
          for (std::int64_t c = 0; c < cols; ++c)
            (*da)[static_cast<std::size_t>(row * cols + c)] +=
                out_adj[e * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
        }
      }
      return;
    }

    case Prim::ScatterAddRows: {
      if (auto* da = sink(0)) {
        const std::int64_t cols = node.shape.back();
        for (std::size_t e = 0; e < node.attrs.indices.size(); ++e) {
          const std::int64_t row = node.attrs.indices[e];
          for (std::int64_t c = 0; c < cols; ++c)
            (*da)[e * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] +=
                out_adj[static_cast<std::size_t>(row * cols + c)];
        }
      }
      return;
    }

    case Prim::L2Norm: {
      if (auto* da = sink(0)) {
        const auto& x = node.inputs[0].value;
        const std::int64_t rows = node.shape[0];
        const std::int64_t cols = node.inputs[0].shape[1];
        for (std::int64_t r = 0; r < rows; ++r) {
          const double norm = node.value[static_cast<std::size_t>(r)];
          if (norm == 0.0) continue;  // subgradient 0 at the kink
          const double g = out_adj[static_cast<std::size_t>(r)] / norm;
          for (std::int64_t c = 0; c < cols; ++c)
            (*da)[static_cast<std::size_t>(r * cols + c)] += g * x[static_cast<std::size_t>(r * cols + c)];
        }
      }
      return;
    }

    case Prim::Reshape: {
      if (auto* da = sink(0)) add_into(*da, out_adj.size(), out_adj.data());
      return;
    }

    case Prim::Transpose: {
      if (auto* da = sink(0)) {
        const std::int64_t rows = node.inputs[0].shape[0];
        const std::int64_t cols = node.inputs[0].shape[1];
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < cols; ++c)
            (*da)[static_cast<std::size_t>(r * cols + c)] +=
                out_adj[static_cast<std::size_t>(c * rows + r)];
      }
      return;
    }
  }
}

}  // namespace vge::ops
