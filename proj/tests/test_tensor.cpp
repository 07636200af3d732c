// Copyright 2026 The lnspolicy Authors
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

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/tensor.hpp"
#include "oracles.hpp"

using namespace lns;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

using Builder = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Contracts the op output with fixed random weights and compares the leaf
// gradients with central differences on every input entry.
void check_gradients(const Builder& build, std::vector<Matrix> inputs, double tol = 1e-6) {
  Rng rng(99);
  Matrix weights;
  auto loss_value = [&]() {
    Tape tape(false);
    std::vector<Tensor> leaves;
    for (const Matrix& m : inputs) leaves.push_back(tape.constant(m));
    const Matrix out = build(tape, leaves).value();
    if (weights.size() == 0) weights = random_matrix(static_cast<int>(out.rows()), static_cast<int>(out.cols()), rng);
    return out.cwiseProduct(weights).sum();
  };
  loss_value();
  Tape tape;
  std::vector<Tensor> leaves;
  for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m));
  Tensor out = build(tape, leaves);
  Tensor loss = sum(mul(out, tape.constant(weights)));
  tape.backward(loss);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix g = leaves[k].grad();
    REQUIRE(g.rows() == inputs[k].rows());
    REQUIRE(g.cols() == inputs[k].cols());
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      const double fd = oracle::central_difference(loss_value, inputs[k].data()[i]);
      CHECK(oracle::relative_error(g.data()[i], fd, 1e-6) <= tol * 100);
    }
  }
}

}  // namespace

TEST_CASE("dense primitives match finite differences") {
  Rng rng(1);
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return matmul(x[0], x[1]); },
                  {random_matrix(3, 4, rng), random_matrix(4, 2, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return transpose_matmul(x[0], x[1]); },
                  {random_matrix(4, 3, rng), random_matrix(4, 2, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return add(x[0], x[1]); },
                  {random_matrix(2, 3, rng), random_matrix(2, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return sub(x[0], x[1]); },
                  {random_matrix(2, 3, rng), random_matrix(2, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return add_row(x[0], x[1]); },
                  {random_matrix(3, 4, rng), random_matrix(1, 4, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return scale(x[0], -2.5); }, {random_matrix(2, 2, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return mul(x[0], x[1]); },
                  {random_matrix(3, 2, rng), random_matrix(3, 2, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return tanh(x[0]); }, {random_matrix(3, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return sigmoid(x[0]); }, {random_matrix(3, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return log(x[0]); },
                  {random_matrix(3, 3, rng, 0.5, 2.0)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return layer_norm(x[0]); }, {random_matrix(3, 6, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return mean_rows(x[0]); }, {random_matrix(5, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return sum(x[0]); }, {random_matrix(2, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return mean(x[0]); }, {random_matrix(2, 3, rng)});
  check_gradients([](Tape&, const std::vector<Tensor>& x) { return clamp(x[0], -0.5, 0.5); },
                  {Matrix{{-0.9, -0.2, 0.3}, {0.7, 0.1, -0.6}}});
}

TEST_CASE("sparse products match finite differences") {
  Rng rng(2);
  auto s = std::make_shared<SparseMatrix>(4, 3);
  std::vector<Eigen::Triplet<double>> t{{0, 0, 1.0}, {1, 2, -2.0}, {2, 1, 0.5}, {3, 0, 3.0}, {3, 2, 1.0}};
  s->setFromTriplets(t.begin(), t.end());
  check_gradients([s](Tape&, const std::vector<Tensor>& x) { return spmm(s, x[0]); }, {random_matrix(3, 2, rng)});
  check_gradients([s](Tape&, const std::vector<Tensor>& x) { return spmm_transpose(s, x[0]); },
                  {random_matrix(4, 2, rng)});
}

TEST_CASE("composite graph with shared subexpressions") {
  Rng rng(3);
  check_gradients(
      [](Tape&, const std::vector<Tensor>& x) {
        Tensor h = tanh(matmul(x[0], x[1]));
        return add(mul(h, h), layer_norm(h));
      },
      {random_matrix(3, 4, rng), random_matrix(4, 5, rng)});
}

TEST_CASE("parameters accumulate gradients across tapes") {
  ParameterSet params;
  Parameter& w = params.add("w", 1, 1);
  w.value(0, 0) = 3.0;
  for (int rep = 0; rep < 2; ++rep) {
    Tape tape;
    Tensor p = tape.param(w);
    tape.backward(sum(mul(p, p)));
  }
  CHECK(w.grad(0, 0) == doctest::Approx(12.0));
  params.zero_grad();
  CHECK(w.grad(0, 0) == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Tensor x = tape.leaf(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
  Tape other;
  Tensor y = other.leaf(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(matmul(x, y), ContractError);
  CHECK_THROWS_AS(matmul(x, tape.leaf(Matrix::Ones(3, 1))), DimensionError);
}

TEST_CASE("gradient clipping and norms") {
  ParameterSet params;
  Parameter& a = params.add("a", 1, 2);
  a.grad << 3.0, 4.0;
  CHECK(params.grad_norm() == doctest::Approx(5.0));
  CHECK(params.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(params.grad_norm() == doctest::Approx(1.0));
  CHECK(a.grad(0, 1) == doctest::Approx(0.8));
  a.grad(0, 0) = std::nan("");
  CHECK_FALSE(params.grads_finite());
}

TEST_CASE("Adam first step moves by the learning rate") {
  ParameterSet params;
  Parameter& p = params.add("p", 1, 1);
  p.value(0, 0) = 1.0;
  p.grad(0, 0) = 1.0;
  Adam opt(params, AdamConfig{0.1});
  opt.step();
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));
  p.grad(0, 0) = std::nan("");
  CHECK_THROWS_AS(opt.step(), TrainingError);
  CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("Adam minimizes a quadratic") {
  ParameterSet params;
  Parameter& p = params.add("p", 1, 2);
  p.value << 2.0, -3.0;
  Adam opt(params, AdamConfig{0.05});
  for (int k = 0; k < 2000; ++k) {
    params.zero_grad();
    Tape tape;
    Tensor x = tape.param(p);
    tape.backward(sum(mul(x, x)));
    opt.step();
  }
  CHECK(std::abs(p.value(0, 0)) < 1e-2);
  CHECK(std::abs(p.value(0, 1)) < 1e-2);
}

TEST_CASE("checkpoints round trip and validate the census") {
  const auto path = std::filesystem::temp_directory_path() / "lnspolicy_test_ckpt.bin";
  ParameterSet a;
  a.add("w", 2, 3).value << 1.0, -2.0, 3.5, 1e-300, 0.1, -0.0;
  a.add("b", 1, 3).value << 7.0, 8.0, 9.0;
  save_checkpoint(path.string(), a, R"({"note":"x"})");

  ParameterSet b;
  b.add("w", 2, 3);
  b.add("b", 1, 3);
  const std::string meta = load_checkpoint(path.string(), b);
  CHECK(meta.find("\"note\"") != std::string::npos);
  CHECK(b.flatten_values() == a.flatten_values());
  CHECK(read_checkpoint_meta(path.string()) == meta);

  ParameterSet wrong_shape;
  wrong_shape.add("w", 3, 2);
  wrong_shape.add("b", 1, 3);
  CHECK_THROWS_AS(load_checkpoint(path.string(), wrong_shape), ParseError);
  ParameterSet wrong_name;
  wrong_name.add("w", 2, 3);
  wrong_name.add("c", 1, 3);
  CHECK_THROWS_AS(load_checkpoint(path.string(), wrong_name), ParseError);
  ParameterSet missing;
  missing.add("w", 2, 3);
  CHECK_THROWS_AS(load_checkpoint(path.string(), missing), ParseError);
  std::filesystem::remove(path);
}
