// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include <vge/errors.hpp>
#include <vge/fdcheck.hpp>
#include <vge/ops.hpp>
#include <vge/rng.hpp>
#include <vge/tape.hpp>

#include "test_util.hpp"

using namespace vge;

TEST_CASE("tensor shape invariants") {
  CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<double>(5, 0.0)), ShapeError);
  Tensor t = Tensor::zeros(Shape{2, 3});
  CHECK(t.numel() == 6);
  CHECK(Tensor::scalar(4.0).item() == 4.0);
  CHECK_THROWS_AS(t.item(), ContractError);
}

TEST_CASE("matmul identity") {
  RngStream rng(7);
  Tensor a = test::random_tensor({3, 3}, rng);
  Tensor eye = Tensor::zeros(Shape{3, 3});
  for (std::int64_t i = 0; i < 3; ++i) eye.at({i, i}) = 1.0;
  Tensor out = ops::matmul(eye, a);
  for (std::size_t i = 0; i < 9; ++i) CHECK(out.data()[i] == a.data()[i]);
  CHECK_THROWS_AS(ops::matmul(a, Tensor::zeros(Shape{4, 2})), ShapeError);
}

TEST_CASE("analytic unary values") {
  CHECK(ops::gelu(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(ops::softplus(Tensor::scalar(0.0)).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Tensor sm = ops::softmax_last_axis(Tensor::from_vector({1, 1, 1, 1}));
  for (double v : sm.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("softmax rows sum to one and stay positive") {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = test::random_tensor({4, 5}, rng, 10.0);
    Tensor y = ops::softmax_last_axis(x);
    for (std::int64_t r = 0; r < 4; ++r) {
      double sum = 0;
      for (std::int64_t c = 0; c < 5; ++c) {
        CHECK(y.at({r, c}) > 0.0);
        sum += y.at({r, c});
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("layernorm normalizes rows") {
  RngStream rng(11);
  Tensor x = test::random_tensor({6, 16}, rng, 2.0);
  Tensor y = ops::layernorm_last_axis(x);
  for (std::int64_t r = 0; r < 6; ++r) {
    double mean = 0, var = 0;
    for (std::int64_t c = 0; c < 16; ++c) mean += y.at({r, c});
    mean /= 16.0;
    for (std::int64_t c = 0; c < 16; ++c) {
      const double d = y.at({r, c}) - mean;
      var += d * d;
    }
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-8);
  }
}

TEST_CASE("gather and scatter are adjoint row movers") {
  Tensor x = Tensor::from_matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const std::int64_t idx[] = {2, 0, 2};
  Tensor g = ops::gather_rows(x, idx);
  CHECK(g.at({0, 0}) == 5.0);
  CHECK(g.at({1, 0}) == 1.0);
  CHECK(g.at({2, 1}) == 6.0);
  Tensor s = ops::scatter_add_rows(g, idx, 3);
  CHECK(s.at({2, 0}) == 10.0);  // two rows landed on index 2
  CHECK(s.at({1, 0}) == 0.0);
  CHECK_THROWS_AS(ops::gather_rows(x, std::vector<std::int64_t>{3}), ContractError);
}

TEST_CASE("apply_primitive dispatch and unknown kind") {
  Tensor a = Tensor::from_matrix(2, 2, {1, 2, 3, 4});
  const Tensor ins[] = {a, a};
  Tensor sum = ops::apply_primitive("add", ins);
  CHECK(sum.at({1, 1}) == 8.0);
  CHECK_THROWS_AS(ops::apply_primitive("hadamard", ins), UnsupportedPrimitive);
}

TEST_CASE("per-primitive gradients match finite differences") {
  RngStream rng(42);
  auto check = [&](const char* name, auto f, Shape shape, int cases, double scale = 1.0) {
    CAPTURE(name);
    for (int i = 0; i < cases; ++i) {
      Tensor x = test::random_tensor(shape, rng, scale);
      const double err = finite_difference_check(f, x, 1e-5);
      CHECK(err < 1e-6);
    }
  };

  // 100 random inputs across the differentiable primitive set.
  check("gelu", [](const Tensor& x) { return ops::mean_reduce(ops::gelu(x)); }, {3, 4}, 10);
  check("softplus", [](const Tensor& x) { return ops::mean_reduce(ops::softplus(x)); }, {3, 4}, 10);
  check("softmax",
        [](const Tensor& x) {
          Tensor y = ops::softmax_last_axis(x);
          return ops::sum_reduce(ops::multiply(y, y));
        },
        {3, 4}, 10);
  check("layernorm",
        [](const Tensor& x) {
          Tensor y = ops::layernorm_last_axis(x);
          return ops::sum_reduce(ops::multiply(y, ops::gelu(y)));
        },
        {3, 5}, 10);
  check("matmul",
        [](const Tensor& x) {
          Tensor y = ops::matmul(x, ops::transpose(x));
          return ops::mean_reduce(y);
        },
        {3, 4}, 10);
  check("multiply-add",
        [](const Tensor& x) {
          return ops::sum_reduce(ops::multiply(ops::add(x, Tensor::scalar(0.5)), x));
        },
        {4, 3}, 10);
  check("l2-norm", [](const Tensor& x) { return ops::sum_reduce(ops::l2_norm(x)); }, {5, 3}, 10);
  check("concat",
        [](const Tensor& x) {
          Tensor c = ops::concat_last_axis(x, ops::gelu(x));
          return ops::mean_reduce(ops::multiply(c, c));
        },
        {3, 3}, 10);
  check("gather-scatter",
        [](const Tensor& x) {
          const std::int64_t idx[] = {1, 0, 1, 2};
          Tensor g = ops::gather_rows(x, idx);
          Tensor s = ops::scatter_add_rows(g, idx, 3);
          return ops::mean_reduce(ops::multiply(s, s));
        },
        {3, 4}, 10);
  check("reshape-transpose",
        [](const Tensor& x) {
          Tensor r = ops::reshape(x, Shape{2, 6});
          return ops::sum_reduce(ops::multiply(ops::transpose(r), ops::transpose(r)));
        },
        {3, 4}, 10);
}

TEST_CASE("bias broadcast add") {
  Tensor x = Tensor::from_matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_vector({10, 20, 30});
  Tensor y = ops::add(x, b);
  CHECK(y.at({1, 2}) == 36.0);

  RngStream rng(5);
  Tensor w = test::random_tensor({3}, rng);
  const double err = finite_difference_check(
      [&](const Tensor& bias) {
        Tensor out = ops::add(Tensor::from_matrix(2, 3, {1, 2, 3, 4, 5, 6}), bias);
        return ops::sum_reduce(ops::multiply(out, out));
      },
      w, 1e-5);
  CHECK(err < 1e-6);
}
