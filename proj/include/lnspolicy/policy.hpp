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

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lnspolicy/ip.hpp"
#include "lnspolicy/random.hpp"
#include "lnspolicy/tensor.hpp"

namespace lns {

inline constexpr int kEmbeddingDim = 128;
inline constexpr int kConvolutionRounds = 2;
inline constexpr int kHeadHidden1 = 256;
inline constexpr int kHeadHidden2 = 128;
inline constexpr double kDefaultClip = 0.2;
inline constexpr int kMaskRetries = 16;
inline constexpr int kDynamicFeatureCount = 3;

// Variable and constraint node features over the instance's coefficient
// matrix (m x n, shared between states of one instance).
struct BipartiteState {
  std::shared_ptr<const SparseMatrix> edges;
  Matrix var_features;  // n x d_v
  Matrix con_features;  // m x 1

  int n_vars() const { return static_cast<int>(var_features.rows()); }
  int n_cons() const { return static_cast<int>(con_features.rows()); }
  // Throws DimensionError when the three parts disagree.
  void validate() const;
};

std::shared_ptr<const SparseMatrix> edge_matrix(const IpInstance& instance);
// m x 1 column of right-hand sides.
Matrix constraint_features(const IpInstance& instance);

using ActionMask = std::vector<std::uint8_t>;

// True when at least one variable is selected and at least one is not.
bool valid_mask(std::span<const std::uint8_t> mask);

// Clamps each probability to [epsilon, 1 - epsilon]. Throws ConfigError unless
// 0 <= epsilon < 0.5.
std::vector<double> clip_probs(std::span<const double> p, double epsilon = kDefaultClip);
Tensor clip_probs(const Tensor& p, double epsilon = kDefaultClip);

struct SampledAction {
  ActionMask mask;
  std::vector<double> draws;  // uniforms of the accepted draw
  int redraws = 0;
  bool forced_flip = false;
};

// Independent Bernoulli(p_i) per variable; empty or universal draws are
// redrawn up to kMaskRetries times, after which one uniformly chosen
// coordinate is flipped. Throws ContractError for n < 2.
SampledAction sample_action(std::span<const double> p, Rng& rng);

// sum_i mask_i log p_i + (1 - mask_i) log(1 - p_i). Throws ContractError if a
// probability lies outside (0, 1).
double log_prob(std::span<const double> p, std::span<const std::uint8_t> mask);
Tensor log_prob(const Tensor& p, std::span<const std::uint8_t> mask);

// Bipartite graph convolution:
//   C <- C + tanh(LN(A V W_v)),  V <- V + tanh(LN(A^T C W_c))
// for kConvolutionRounds rounds after affine input projections.
class GraphEncoder {
 public:
  GraphEncoder(ParameterSet& params, const std::string& prefix, int var_width);
  // n x kEmbeddingDim variable embeddings.
  Tensor forward(Tape& tape, const BipartiteState& state, const Matrix& var_input) const;
  int var_width() const { return var_width_; }

 private:
  int var_width_;
  Parameter* var_w_;
  Parameter* var_b_;
  Parameter* con_w_;
  Parameter* con_b_;
  std::vector<Parameter*> wv_;
  std::vector<Parameter*> wc_;
};

// Per-variable selection probabilities sigmoid(MLP(v_i)).
class ActorNet {
 public:
  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  explicit ActorNet(int var_width, std::uint64_t seed = 0);
  ActorNet(const ActorNet& other);
  ActorNet& operator=(const ActorNet&) = delete;

  Tensor forward(Tape& tape, const BipartiteState& state) const;  // n x 1
  std::vector<double> probabilities(const BipartiteState& state) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int var_width() const { return encoder_->var_width(); }

 private:
  ParameterSet params_;
  std::unique_ptr<GraphEncoder> encoder_;
  std::vector<Parameter*> head_;  // W1 b1 W2 b2 W3 b3
};

// Q(s, a): encoder over [var features | selection bit], mean pooling, MLP to
// a scalar with no bias on the final layer.
class CriticNet {
 public:
  explicit CriticNet(int var_width, std::uint64_t seed = 0);
  CriticNet(const CriticNet& other);
  CriticNet& operator=(const CriticNet&) = delete;

  Tensor forward(Tape& tape, const BipartiteState& state, std::span<const std::uint8_t> mask) const;  // 1 x 1
  double value(const BipartiteState& state, std::span<const std::uint8_t> mask) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int var_width() const { return var_width_; }

 private:
  int var_width_;
  ParameterSet params_;
  std::unique_ptr<GraphEncoder> encoder_;
  std::vector<Parameter*> head_;  // W1 b1 W2 b2 W3
};

// Checkpoint meta carries kind ("actor" / "critic"), var_width and any extra
// fields given as a JSON object.
void save_actor(const std::string& path, const ActorNet& actor, const std::string& extra_meta_json = "{}");
void save_critic(const std::string& path, const CriticNet& critic, const std::string& extra_meta_json = "{}");
// Throws ParseError on a census mismatch or wrong kind.
ActorNet load_actor(const std::string& path);
CriticNet load_critic(const std::string& path);

}  // namespace lns
