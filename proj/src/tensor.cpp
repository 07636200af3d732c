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

#include "lnspolicy/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "lnspolicy/errors.hpp"

namespace lns {
namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void same_tape(const Tensor& a, const Tensor& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw ContractError("operands recorded on different tapes");
}

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
}

}  // namespace

// ---------------------------------------------------------------- ParameterSet

Parameter& ParameterSet::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name " + name);
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p->value.size());
  return total;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

void ParameterSet::scale_grad(double factor) {
  for (auto& p : params_) p->grad *= factor;
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) scale_grad(max_norm / norm);
  return norm;
}

bool ParameterSet::grads_finite() const {
  for (const auto& p : params_)
    if (!p->grad.allFinite()) return false;
  return true;
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) throw DimensionError("parameter census mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    if (params_[i]->value.rows() != other[i].value.rows() || params_[i]->value.cols() != other[i].value.cols())
      throw DimensionError("parameter shape mismatch for " + params_[i]->name);
    params_[i]->value = other[i].value;
  }
}

std::vector<double> ParameterSet::flatten_values() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& p : params_) flat.insert(flat.end(), p->value.data(), p->value.data() + p->value.size());
  return flat;
}

std::vector<double> ParameterSet::flatten_grads() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& p : params_) flat.insert(flat.end(), p->grad.data(), p->grad.data() + p->grad.size());
  return flat;
}

void ParameterSet::unflatten_values(std::span<const double> flat) {
  if (flat.size() != scalar_count()) throw DimensionError("flat parameter vector has wrong length");
  std::size_t k = 0;
  for (auto& p : params_) {
    std::copy(flat.begin() + k, flat.begin() + k + p->value.size(), p->value.data());
    k += static_cast<std::size_t>(p->value.size());
  }
}

// ---------------------------------------------------------------- Tensor/Tape

const Matrix& Tensor::value() const { return tape_->value(id_); }
const Matrix& Tensor::grad() const { return tape_->grad_view(id_); }
bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("item() on a non-scalar tensor " + shape_str(v));
  return v(0, 0);
}

Tensor Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, record_grad_, nullptr, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, record_grad_, nullptr, record_grad_ ? &p : nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, Adjoint adjoint) {
  bool needs_grad = false;
  if (record_grad_)
    for (const Tensor& t : inputs) {
      if (t.tape() != this) throw ContractError("operand recorded on a different tape");
      needs_grad = needs_grad || t.requires_grad();
    }
  nodes_.push_back(Node{std::move(value), {}, needs_grad, needs_grad ? std::move(adjoint) : nullptr, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss was not recorded on this tape");
  if (loss.value().size() != 1) throw ContractError("backward: loss must be 1x1, got " + shape_str(loss.value()));
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id()).setConstant(1.0);
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.grad.size() == 0) {
      if (n.adjoint == nullptr) grad(i);  // untouched leaf: explicit zero gradient
      continue;
    }
    if (n.adjoint) n.adjoint(*this, i);
    if (n.param != nullptr) n.param->grad += nodes_[i].grad;
  }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------- primitives

Tensor matmul(const Tensor& a, const Tensor& b) {
  same_tape(a, b);
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_str(a.value()) + " x " + shape_str(b.value()));
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_view(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Tensor transpose_matmul(const Tensor& a, const Tensor& b) {
  same_tape(a, b);
  if (a.rows() != b.rows())
    throw DimensionError("transpose_matmul: " + shape_str(a.value()) + "^T x " + shape_str(b.value()));
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().transpose() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_view(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += t.value(ib) * g.transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia) * g;
  });
}

Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x) {
  if (s->cols() != x.rows())
    throw DimensionError("spmm: sparse (" + std::to_string(s->rows()) + "x" + std::to_string(s->cols()) +
                         ") x " + shape_str(x.value()));
  const int ix = x.id();
  Matrix out = (*s) * x.value();
  return x.tape()->record(std::move(out), {x}, [s, ix](Tape& t, int self) {
    t.grad(ix).noalias() += s->transpose() * t.grad_view(self);
  });
}

Tensor spmm_transpose(std::shared_ptr<const SparseMatrix> s, const Tensor& x) {
  if (s->rows() != x.rows())
    throw DimensionError("spmm_transpose: sparse^T (" + std::to_string(s->cols()) + "x" +
                         std::to_string(s->rows()) + ") x " + shape_str(x.value()));
  const int ix = x.id();
  Matrix out = s->transpose() * x.value();
  return x.tape()->record(std::move(out), {x}, [s, ix](Tape& t, int self) {
    t.grad(ix).noalias() += (*s) * t.grad_view(self);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad_view(self);
    if (t.requires_grad(ib)) t.grad(ib) += t.grad_view(self);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad_view(self);
    if (t.requires_grad(ib)) t.grad(ib) -= t.grad_view(self);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols())
    throw DimensionError("add_row: " + shape_str(a.value()) + " + " + shape_str(row.value()));
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia) += t.grad_view(self);
    if (t.requires_grad(ir)) t.grad(ir) += t.grad_view(self).colwise().sum();
  });
}

Tensor scale(const Tensor& a, double s) {
  const int ia = a.id();
  return a.tape()->record(a.value() * s, {a}, [ia, s](Tape& t, int self) { t.grad(ia) += s * t.grad_view(self); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad_view(self);
    if (t.requires_grad(ia)) t.grad(ia) += g.cwiseProduct(t.value(ib));
    if (t.requires_grad(ib)) t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Tensor tanh(const Tensor& a) {
  const int ia = a.id();
  Matrix out = a.value().array().tanh().matrix();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.grad(ia).array() += t.grad_view(self).array() * (1.0 - y * y);
  });
}

Tensor sigmoid(const Tensor& a) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([](double z) {
    z = std::clamp(z, -kSigmoidClamp, kSigmoidClamp);
    return 1.0 / (1.0 + std::exp(-z));
  });
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.grad(ia).array() += t.grad_view(self).array() * y * (1.0 - y);
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  const int ia = a.id();
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape()->record(std::move(out), {a}, [ia, lo, hi](Tape& t, int self) {
    const auto x = t.value(ia).array();
    t.grad(ia).array() += ((x > lo) && (x < hi)).select(t.grad_view(self).array(), 0.0);
  });
}

Tensor log(const Tensor& a) {
  const int ia = a.id();
  Matrix out = a.value().array().log().matrix();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, int self) {
    t.grad(ia).array() += t.grad_view(self).array() / t.value(ia).array();
  });
}

Tensor layer_norm(const Tensor& a, double eps) {
  const int ia = a.id();
  const Matrix& x = a.value();
  const Eigen::Index cols = x.cols();
  if (cols == 0) throw DimensionError("layer_norm on an empty row");
  Matrix out(x.rows(), cols);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    out.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  return a.tape()->record(std::move(out), {a}, [ia, inv_std](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad_view(self);
    Matrix& gx = t.grad(ia);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double g_mean = g.row(r).mean();
      const double gy_mean = g.row(r).dot(y.row(r)) / static_cast<double>(y.cols());
      gx.row(r).array() += inv_std(r) * (g.row(r).array() - g_mean - y.row(r).array() * gy_mean);
    }
  });
}

Tensor mean_rows(const Tensor& a) {
  const int ia = a.id();
  const double rows = static_cast<double>(a.rows());
  if (a.rows() == 0) throw DimensionError("mean_rows on an empty tensor");
  Matrix out = a.value().colwise().mean();
  return a.tape()->record(std::move(out), {a}, [ia, rows](Tape& t, int self) {
    t.grad(ia).rowwise() += t.grad_view(self).row(0) / rows;
  });
}

Tensor sum(const Tensor& a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, int self) {
    t.grad(ia).array() += t.grad_view(self)(0, 0);
  });
}

Tensor mean(const Tensor& a) {
  if (a.value().size() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

// ---------------------------------------------------------------- Adam

Adam::Adam(ParameterSet& params, AdamConfig config) : params_(&params), config_(config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
    v_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
  }
}

void Adam::step() {
  if (!params_->grads_finite()) throw TrainingError("Adam step: non-finite gradient");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_->size(); ++i) {
    Parameter& p = (*params_)[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= config_.learning_rate * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace lns
