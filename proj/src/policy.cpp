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

#include "lnspolicy/policy.hpp"

#include <cmath>

#include <json.hpp>

#include "lnspolicy/errors.hpp"

namespace lns {
namespace {

void init_uniform(Parameter& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.rows()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-bound, bound);
}

// y = x W + b, with b optional.
Tensor dense(Tape& tape, const Tensor& x, Parameter* w, Parameter* b) {
  Tensor y = matmul(x, tape.param(*w));
  if (b != nullptr) y = add_row(y, tape.param(*b));
  return y;
}

void seed_params(ParameterSet& params, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.value.rows() == 1 && p.name.ends_with(".b")) continue;
    init_uniform(p, rng);
  }
}

std::string merged_meta(const std::string& kind, int var_width, const std::string& extra) {
  nlohmann::json meta = extra.empty() ? nlohmann::json::object() : nlohmann::json::parse(extra);
  if (!meta.is_object()) throw ConfigError("checkpoint meta must be a JSON object");
  meta["kind"] = kind;
  meta["var_width"] = var_width;
  return meta.dump();
}

int checked_width(const std::string& path, const std::string& kind) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_checkpoint_meta(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad checkpoint meta: " + e.what());
  }
  if (meta.value("kind", std::string()) != kind)
    throw ParseError(path + ": expected a " + kind + " checkpoint");
  if (!meta.contains("var_width") || !meta["var_width"].is_number_integer())
    throw ParseError(path + ": checkpoint meta lacks var_width");
  return meta["var_width"].get<int>();
}

}  // namespace

void BipartiteState::validate() const {
  if (!edges) throw DimensionError("state has no edge matrix");
  if (edges->rows() != con_features.rows() || edges->cols() != var_features.rows())
    throw DimensionError("edge matrix shape does not match node features");
  if (con_features.cols() != 1) throw DimensionError("constraint features must have one column");
}

std::shared_ptr<const SparseMatrix> edge_matrix(const IpInstance& instance) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(instance.nnz());
  for (int j = 0; j < instance.n_cons(); ++j)
    for (const Entry& e : instance.row(j)) trips.emplace_back(j, e.index, e.value);
  auto a = std::make_shared<SparseMatrix>(instance.n_cons(), instance.n_vars());
  a->setFromTriplets(trips.begin(), trips.end());
  a->makeCompressed();
  return a;
}

Matrix constraint_features(const IpInstance& instance) {
  Matrix c(instance.n_cons(), 1);
  const auto b = instance.rhs();
  for (int j = 0; j < instance.n_cons(); ++j) c(j, 0) = b[j];
  return c;
}

bool valid_mask(std::span<const std::uint8_t> mask) {
  bool any_in = false, any_out = false;
  for (std::uint8_t v : mask) (v ? any_in : any_out) = true;
  return any_in && any_out;
}

static void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("clip epsilon must lie in [0, 0.5)");
}

std::vector<double> clip_probs(std::span<const double> p, double epsilon) {
  check_epsilon(epsilon);
  std::vector<double> out(p.begin(), p.end());
  for (double& v : out) v = std::min(std::max(v, epsilon), 1.0 - epsilon);
  return out;
}

Tensor clip_probs(const Tensor& p, double epsilon) {
  check_epsilon(epsilon);
  return clamp(p, epsilon, 1.0 - epsilon);
}

SampledAction sample_action(std::span<const double> p, Rng& rng) {
  const int n = static_cast<int>(p.size());
  if (n < 2) throw ContractError("sample_action needs at least two variables");
  SampledAction out;
  out.mask.resize(n);
  out.draws.resize(n);
  for (int attempt = 0; attempt <= kMaskRetries; ++attempt) {
    for (int i = 0; i < n; ++i) {
      out.draws[i] = rng.uniform();
      out.mask[i] = out.draws[i] < p[i] ? 1 : 0;
    }
    if (valid_mask(out.mask)) return out;
    if (attempt < kMaskRetries) ++out.redraws;
  }
  const int i = rng.index(n);
  out.mask[i] ^= 1;
  out.forced_flip = true;
  return out;
}

double log_prob(std::span<const double> p, std::span<const std::uint8_t> mask) {
  if (p.size() != mask.size()) throw DimensionError("log_prob: probability / mask length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && p[i] < 1.0)) throw ContractError("log_prob: probability outside (0, 1)");
    total += mask[i] ? std::log(p[i]) : std::log1p(-p[i]);
  }
  return total;
}

Tensor log_prob(const Tensor& p, std::span<const std::uint8_t> mask) {
  if (p.cols() != 1 || static_cast<std::size_t>(p.rows()) != mask.size())
    throw DimensionError("log_prob: probability / mask shape mismatch");
  const Eigen::Index n = p.rows();
  Matrix sign(n, 1), offset(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = p.value()(i, 0);
    if (!(v > 0.0 && v < 1.0)) throw ContractError("log_prob: probability outside (0, 1)");
    sign(i, 0) = mask[i] ? 1.0 : -1.0;
    offset(i, 0) = mask[i] ? 0.0 : 1.0;
  }
  Tape& tape = *p.tape();
  // Probability of the taken choice: mask ? p : 1 - p.
  Tensor chosen = add(mul(tape.constant(std::move(sign)), p), tape.constant(std::move(offset)));
  return sum(log(chosen));
}

GraphEncoder::GraphEncoder(ParameterSet& params, const std::string& prefix, int var_width) : var_width_(var_width) {
  if (var_width <= 0) throw ConfigError("encoder input width must be positive");
  var_w_ = &params.add(prefix + ".var_proj.W", var_width, kEmbeddingDim);
  var_b_ = &params.add(prefix + ".var_proj.b", 1, kEmbeddingDim);
  con_w_ = &params.add(prefix + ".con_proj.W", 1, kEmbeddingDim);
  con_b_ = &params.add(prefix + ".con_proj.b", 1, kEmbeddingDim);
  for (int k = 0; k < kConvolutionRounds; ++k) {
    wv_.push_back(&params.add(prefix + ".conv" + std::to_string(k) + ".Wv", kEmbeddingDim, kEmbeddingDim));
    wc_.push_back(&params.add(prefix + ".conv" + std::to_string(k) + ".Wc", kEmbeddingDim, kEmbeddingDim));
  }
}

Tensor GraphEncoder::forward(Tape& tape, const BipartiteState& state, const Matrix& var_input) const {
  state.validate();
  if (var_input.rows() != state.n_vars()) throw DimensionError("variable input rows do not match the state");
  if (var_input.cols() != var_width_)
    throw DimensionError("variable input has " + std::to_string(var_input.cols()) + " columns, encoder expects " +
                         std::to_string(var_width_));
  Tensor v = dense(tape, tape.constant(var_input), var_w_, var_b_);
  Tensor c = dense(tape, tape.constant(state.con_features), con_w_, con_b_);
  for (int k = 0; k < kConvolutionRounds; ++k) {
    c = add(c, tanh(layer_norm(spmm(state.edges, matmul(v, tape.param(*wv_[k]))))));
    v = add(v, tanh(layer_norm(spmm_transpose(state.edges, matmul(c, tape.param(*wc_[k]))))));
  }
  return v;
}

ActorNet::ActorNet(int var_width, std::uint64_t seed)
    : encoder_(std::make_unique<GraphEncoder>(params_, "actor", var_width)) {
  head_.push_back(&params_.add("actor.head0.W", kEmbeddingDim, kHeadHidden1));
  head_.push_back(&params_.add("actor.head0.b", 1, kHeadHidden1));
  head_.push_back(&params_.add("actor.head1.W", kHeadHidden1, kHeadHidden2));
  head_.push_back(&params_.add("actor.head1.b", 1, kHeadHidden2));
  head_.push_back(&params_.add("actor.head2.W", kHeadHidden2, 1));
  head_.push_back(&params_.add("actor.head2.b", 1, 1));
  seed_params(params_, seed);
}

ActorNet::ActorNet(const ActorNet& other) : ActorNet(other.var_width()) { params_.assign_values(other.params_); }

Tensor ActorNet::forward(Tape& tape, const BipartiteState& state) const {
  Tensor v = encoder_->forward(tape, state, state.var_features);
  Tensor h = tanh(dense(tape, v, head_[0], head_[1]));
  h = tanh(dense(tape, h, head_[2], head_[3]));
  return sigmoid(dense(tape, h, head_[4], head_[5]));
}

std::vector<double> ActorNet::probabilities(const BipartiteState& state) const {
  Tape tape(false);
  const Matrix& p = forward(tape, state).value();
  return std::vector<double>(p.data(), p.data() + p.size());
}

CriticNet::CriticNet(int var_width, std::uint64_t seed)
    : var_width_(var_width), encoder_(std::make_unique<GraphEncoder>(params_, "critic", var_width + 1)) {
  head_.push_back(&params_.add("critic.head0.W", kEmbeddingDim, kHeadHidden1));
  head_.push_back(&params_.add("critic.head0.b", 1, kHeadHidden1));
  head_.push_back(&params_.add("critic.head1.W", kHeadHidden1, kHeadHidden2));
  head_.push_back(&params_.add("critic.head1.b", 1, kHeadHidden2));
  head_.push_back(&params_.add("critic.head2.W", kHeadHidden2, 1));
  seed_params(params_, seed);
}

CriticNet::CriticNet(const CriticNet& other) : CriticNet(other.var_width()) { params_.assign_values(other.params_); }

Tensor CriticNet::forward(Tape& tape, const BipartiteState& state, std::span<const std::uint8_t> mask) const {
  if (static_cast<int>(mask.size()) != state.n_vars()) throw DimensionError("critic: mask length mismatch");
  if (state.var_features.cols() != var_width_) throw DimensionError("critic: variable feature width mismatch");
  Matrix input(state.n_vars(), var_width_ + 1);
  input.leftCols(var_width_) = state.var_features;
  for (int i = 0; i < state.n_vars(); ++i) input(i, var_width_) = mask[i];
  Tensor v = encoder_->forward(tape, state, input);
  Tensor g = mean_rows(v);
  Tensor h = tanh(dense(tape, g, head_[0], head_[1]));
  h = tanh(dense(tape, h, head_[2], head_[3]));
  return dense(tape, h, head_[4], nullptr);
}

double CriticNet::value(const BipartiteState& state, std::span<const std::uint8_t> mask) const {
  Tape tape(false);
  return forward(tape, state, mask).item();
}

void save_actor(const std::string& path, const ActorNet& actor, const std::string& extra_meta_json) {
  save_checkpoint(path, actor.params(), merged_meta("actor", actor.var_width(), extra_meta_json));
}

void save_critic(const std::string& path, const CriticNet& critic, const std::string& extra_meta_json) {
  save_checkpoint(path, critic.params(), merged_meta("critic", critic.var_width(), extra_meta_json));
}

ActorNet load_actor(const std::string& path) {
  ActorNet actor(checked_width(path, "actor"));
  load_checkpoint(path, actor.params());
  return actor;
}

CriticNet load_critic(const std::string& path) {
  CriticNet critic(checked_width(path, "critic"));
  load_checkpoint(path, critic.params());
  return critic;
}

}  // namespace lns
