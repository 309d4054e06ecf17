// SPDX-License-Identifier: Apache-2.0
#include "vge/params.hpp"

#include <cmath>

#include "vge/errors.hpp"

namespace vge {

Parameter& ParameterStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  Parameter p;
  p.name = name;
  p.m = Tensor::zeros(init.shape());
  p.v = Tensor::zeros(init.shape());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return params_[it->second];
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

std::int64_t ParameterStore::total_elements() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

Tensor ParameterStore::pack() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(total_elements()));
  for (const auto& p : params_)
    flat.insert(flat.end(), p.value.data().begin(), p.value.data().end());
  const auto n = static_cast<std::int64_t>(flat.size());
  return Tensor(Shape{n, 1}, std::move(flat));
}

void ParameterStore::unpack(const Tensor& flat) {
  if (flat.numel() != total_elements())
    throw ShapeError("unpack: expected " + std::to_string(total_elements()) +
                     " values, got " + std::to_string(flat.numel()));
  std::size_t off = 0;
  for (auto& p : params_) {
    std::copy_n(flat.data().data() + off, p.value.numel(), p.value.data().data());
    off += static_cast<std::size_t>(p.value.numel());
  }
}

std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>>
ParameterStore::layout() const {
  std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> out;
  std::int64_t off = 0;
  for (const auto& p : params_) {
    out.emplace_back(p.name, std::make_pair(off, p.value.numel()));
    off += p.value.numel();
  }
  return out;
}

StepReport AdamOptimizer::step(ParameterStore& params, const GradientMap& grads) {
  StepReport report;
  ++step_count_;
  const double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (auto& p : params.all()) {
    auto it = grads.find(p.name);
    if (it == grads.end()) {
      report.skipped.push_back(p.name);
      continue;
    }
    const Tensor& g = it->second;
    if (g.shape() != p.value.shape())
      throw ShapeError("gradient shape " + shape_str(g.shape()) + " for parameter " +
                       p.name + " of shape " + shape_str(p.value.shape()));
    auto pv = p.value.data();
    auto pm = p.m.data();
    auto pvv = p.v.data();
    auto pg = g.data();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      pm[i] = cfg_.beta1 * pm[i] + (1.0 - cfg_.beta1) * pg[i];
      pvv[i] = cfg_.beta2 * pvv[i] + (1.0 - cfg_.beta2) * pg[i] * pg[i];
      const double mhat = pm[i] / b1t;
      const double vhat = pvv[i] / b2t;
      pv[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
  return report;
}

Tensor xavier_init(std::int64_t rows, std::int64_t cols, RngStream& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(rows + cols));
  std::vector<double> data(static_cast<std::size_t>(rows * cols));
  for (auto& v : data) v = std * rng.normal();
  return Tensor(Shape{rows, cols}, std::move(data));
}

Tensor orthogonal_rows(std::int64_t count, std::int64_t dim, RngStream& rng) {
  if (count > dim)
    throw ContractError("orthogonal_rows: count " + std::to_string(count) +
                        " exceeds dim " + std::to_string(dim));
  // Modified Gram-Schmidt with one re-orthogonalization pass.
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(count));
  for (auto& row : rows) {
    row.resize(static_cast<std::size_t>(dim));
    for (auto& v : row) v = rng.normal();
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t q = 0; q < r; ++q) {
        double dot = 0;
        for (std::int64_t c = 0; c < dim; ++c)
          dot += rows[r][static_cast<std::size_t>(c)] * rows[q][static_cast<std::size_t>(c)];
        for (std::int64_t c = 0; c < dim; ++c)
          rows[r][static_cast<std::size_t>(c)] -= dot * rows[q][static_cast<std::size_t>(c)];
      }
    }
    double norm = 0;
    for (double v : rows[r]) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : rows[r]) v /= norm;
  }
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(count * dim));
  for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  return Tensor(Shape{count, dim}, std::move(flat));
}

BoundParams BoundParams::bind(const ParameterStore& store) {
  BoundParams bound;
  Tape* tape = Tape::active();
  for (const auto& p : store.all()) {
    bound.tensors_.emplace(p.name, tape ? tape->watch(p.name, p.value) : p.value.detached());
  }
  return bound;
}

void BoundParams::set(const std::string& name, Tensor t) {
  tensors_[name] = std::move(t);
}

const Tensor& BoundParams::operator[](const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unbound parameter: " + name);
  return it->second;
}

bool BoundParams::contains(const std::string& name) const {
  return tensors_.count(name) != 0;
}

}  // namespace vge
