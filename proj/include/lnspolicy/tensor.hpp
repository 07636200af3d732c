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

#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records primitive operations in execution order; backward()
// replays their adjoint rules in exact reverse order. Parameters live outside
// the tape and receive accumulated gradients, so one tape can be built per
// sample and cleared after its backward pass.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lns {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value, accumulated by Tape::backward

  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

// Ordered, named parameter collection with stable element addresses.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  void scale_grad(double factor);
  double grad_norm() const;
  // Rescales gradients so their global L2 norm is at most max_norm. Returns
  // the norm before clipping.
  double clip_grad_norm(double max_norm);
  bool grads_finite() const;
  // Copies values from another set with the same census.
  void assign_values(const ParameterSet& other);

  // Flat views used by finite-difference checks and tests.
  std::vector<double> flatten_values() const;
  std::vector<double> flatten_grads() const;
  void unflatten_values(std::span<const double> flat);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

// Handle to a recorded value. Cheap to copy; valid until the tape is cleared.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  // Gradient after backward(); zero-sized for nodes that do not require grad.
  const Matrix& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double item() const;  // value of a 1x1 tensor
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // With record_grad = false only forward values are kept (inference mode).
  explicit Tape(bool record_grad = true) : record_grad_(record_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor leaf(Matrix value);  // requires grad; gradient is read from the tensor
  Tensor param(Parameter& p);  // requires grad; gradient accumulates into p.grad

  // Seeds d(loss)/d(loss) = 1 and runs adjoint rules in reverse order. Throws
  // ContractError if loss is not 1x1 or was not recorded on this tape.
  void backward(const Tensor& loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }
  bool record_grad() const { return record_grad_; }

  // Appends a node. `inputs` decide requires_grad; the adjoint closure is
  // dropped when nothing upstream needs a gradient.
  using Adjoint = std::function<void(Tape&, int self)>;
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, Adjoint adjoint);

  const Matrix& value(int id) const { return nodes_[id].value; }
  Matrix& grad(int id);  // lazily zero-initialized
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Matrix& grad_view(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Adjoint adjoint;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  bool record_grad_;
};

// Primitives. All throw DimensionError on non-conforming shapes.
Tensor matmul(const Tensor& a, const Tensor& b);
// a^T b
Tensor transpose_matmul(const Tensor& a, const Tensor& b);
// S x, and S^T x, for a constant sparse S that must outlive the tape.
Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x);
Tensor spmm_transpose(std::shared_ptr<const SparseMatrix> s, const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// a + 1 x cols row vector broadcast over rows
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor tanh(const Tensor& a);
// Pre-activation clamped to [-kSigmoidClamp, kSigmoidClamp].
inline constexpr double kSigmoidClamp = 40.0;
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);
// Elementwise clamp; gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& a, double lo, double hi);
// Per-row standardization without affine parameters.
inline constexpr double kLayerNormEps = 1e-5;
Tensor layer_norm(const Tensor& a, double eps = kLayerNormEps);
// 1 x cols mean over rows.
Tensor mean_rows(const Tensor& a);
Tensor sum(const Tensor& a);   // 1x1
Tensor mean(const Tensor& a);  // 1x1

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over one ParameterSet. Descends on .grad.
class Adam {
 public:
  Adam(ParameterSet& params, AdamConfig config = {});
  // Throws TrainingError (and leaves parameters untouched) if any gradient is
  // not finite.
  void step();
  long steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  ParameterSet* params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long step_ = 0;
};

// Little-endian float64 payload preceded by a one-line JSON header:
//   {"format":"lnspolicy-checkpoint","version":1,"meta":{...},
//    "parameters":[{"name":...,"shape":[r,c]},...]}\n<payload>
// `meta_json` must be a JSON object (or empty).
void save_checkpoint(const std::string& path, const ParameterSet& params, const std::string& meta_json = "{}");
// Loads into `params`, validating the census (names, order and shapes).
// Returns the stored meta object as JSON text. Throws ParseError on mismatch.
std::string load_checkpoint(const std::string& path, ParameterSet& params);
// Header meta without touching any parameters.
std::string read_checkpoint_meta(const std::string& path);

}  // namespace lns
