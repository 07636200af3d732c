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

#include "lnspolicy/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "lnspolicy/errors.hpp"

namespace lns {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualTol = 1e-9;
constexpr double kPrimalTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kHarrisDelta = 1e-9;
constexpr double kPhaseOneTol = 1e-7;
constexpr int kRefreshEvery = 50;
constexpr int kStallLimit = 50;

enum class VarState : std::uint8_t { kBasic, kLower, kUpper };

// Columns are ordered structurals [0, n), slacks [n, n+m), artificials after.
// Slack i has column +e_i, artificial k has column -e_{art_row[k]}.
class Simplex {
 public:
  Simplex(const LpProblem& p, std::span<const double> start, int iteration_limit)
      : p_(p), n_(p.n), m_(p.m), limit_(iteration_limit) {
    lo_.assign(p.lower.begin(), p.lower.end());
    up_.assign(p.upper.begin(), p.upper.end());
    x_.resize(n_);
    state_.assign(n_, VarState::kLower);
    for (int j = 0; j < n_; ++j) {
      double v = start.empty() ? lo_[j] : std::clamp(start[j], lo_[j], up_[j]);
      // Nonbasic structurals must sit on a bound.
      if (v - lo_[j] <= up_[j] - v) {
        x_[j] = lo_[j];
        state_[j] = VarState::kLower;
      } else {
        x_[j] = up_[j];
        state_[j] = VarState::kUpper;
      }
    }
    std::vector<double> r(p.rhs.begin(), p.rhs.end());
    for (int j = 0; j < n_; ++j)
      if (x_[j] != 0.0)
        for (std::size_t k = p.col_start[j]; k < p.col_start[j + 1]; ++k) r[p.row_index[k]] -= p.value[k] * x_[j];

    for (int i = 0; i < m_; ++i) {
      lo_.push_back(0.0);
      up_.push_back(kInf);
    }
    x_.resize(n_ + m_, 0.0);
    state_.resize(n_ + m_, VarState::kLower);
    basis_.resize(m_);
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      if (r[i] >= -kPrimalTol) {
        basis_[i] = n_ + i;
        x_[n_ + i] = std::max(r[i], 0.0);
        state_[n_ + i] = VarState::kBasic;
        binv_(i, i) = 1.0;
      } else {
        const int a = n_ + m_ + static_cast<int>(art_row_.size());
        art_row_.push_back(i);
        lo_.push_back(0.0);
        up_.push_back(kInf);
        x_.push_back(-r[i]);
        state_.push_back(VarState::kBasic);
        basis_[i] = a;
        binv_(i, i) = -1.0;
      }
    }
    total_ = n_ + m_ + static_cast<int>(art_row_.size());
    cost_.assign(total_, 0.0);
    d_.assign(total_, 0.0);
    y_.assign(m_, 0.0);
    alpha_.assign(m_, 0.0);
  }

  LpSolution run() {
    LpSolution out;
    LpStatus status = LpStatus::kOptimal;
    if (!art_row_.empty()) {
      for (int k = 0; k < static_cast<int>(art_row_.size()); ++k) cost_[n_ + m_ + k] = 1.0;
      status = optimize();
      if (status == LpStatus::kOptimal) {
        double infeas = 0.0;
        for (int k = 0; k < static_cast<int>(art_row_.size()); ++k) infeas += x_[n_ + m_ + k];
        if (infeas > kPhaseOneTol) status = LpStatus::kInfeasible;
      }
      for (int k = 0; k < static_cast<int>(art_row_.size()); ++k) {
        const int a = n_ + m_ + k;
        cost_[a] = 0.0;
        up_[a] = 0.0;
        if (state_[a] != VarState::kBasic) x_[a] = 0.0;
      }
    }
    if (status == LpStatus::kOptimal) {
      for (int j = 0; j < n_; ++j) cost_[j] = p_.cost[j];
      status = optimize();
    }
    refresh();
    compute_reduced_costs();

    out.status = status;
    out.iterations = iterations_;
    out.primal.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) out.primal[j] = std::clamp(out.primal[j], p_.lower[j], p_.upper[j]);
    out.objective = 0.0;
    for (int j = 0; j < n_; ++j) out.objective += p_.cost[j] * out.primal[j];
    out.reduced_costs.resize(n_);
    out.basis_status.resize(n_);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == VarState::kBasic) {
        out.reduced_costs[j] = 0.0;
        out.basis_status[j] = BasisStatus::kBasic;
      } else {
        out.reduced_costs[j] = d_[j];
        out.basis_status[j] = state_[j] == VarState::kUpper ? BasisStatus::kUpper : BasisStatus::kLower;
      }
    }
    out.duals = y_;
    return out;
  }

 private:
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) f(p_.row_index[k], p_.value[k]);
    } else if (j < n_ + m_) {
      f(j - n_, 1.0);
    } else {
      f(art_row_[j - n_ - m_], -1.0);
    }
  }

  bool fixed(int j) const { return up_[j] - lo_[j] <= kPrimalTol; }

  // Recomputes duals and basic values from the current inverse, reinverting
  // when the basic solution no longer satisfies the rows.
  void refresh() {
    if (m_ == 0) return;
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(p_.rhs.data(), m_);
    for (int j = 0; j < total_; ++j)
      if (state_[j] != VarState::kBasic && x_[j] != 0.0) for_column(j, [&](int i, double a) { rhs(i) -= a * x_[j]; });
    auto solve_basic = [&]() {
      Eigen::VectorXd xb = binv_ * rhs;
      for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb(i);
    };
    solve_basic();
    Eigen::VectorXd resid = rhs;
    for (int i = 0; i < m_; ++i) {
      const double xv = x_[basis_[i]];
      for_column(basis_[i], [&](int r, double a) { resid(r) -= a * xv; });
    }
    if (resid.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
      reinvert();
      solve_basic();
    }
    for (int k = 0; k < m_; ++k) {
      double s = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double c = cost_[basis_[i]];
        if (c != 0.0) s += c * binv_(i, k);
      }
      y_[k] = s;
    }
  }

  void reinvert() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) for_column(basis_[i], [&](int r, double a) { b(r, i) = a; });
    binv_ = b.partialPivLu().inverse();
  }

  void compute_reduced_costs() {
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == VarState::kBasic) {
        d_[j] = 0.0;
        continue;
      }
      double dj = cost_[j];
      for_column(j, [&](int i, double a) { dj -= y_[i] * a; });
      d_[j] = dj;
    }
  }

  bool improving(int j) const {
    if (state_[j] == VarState::kBasic || fixed(j)) return false;
    return (state_[j] == VarState::kLower && d_[j] < -kDualTol) ||
           (state_[j] == VarState::kUpper && d_[j] > kDualTol);
  }

  LpStatus optimize() {
    int stall = 0;
    bool bland = false;
    int since_refresh = kRefreshEvery;
    while (true) {
      if (iterations_ >= limit_) return LpStatus::kIterationLimit;
      if (since_refresh >= kRefreshEvery) {
        refresh();
        since_refresh = 0;
      }
      compute_reduced_costs();

      int q = -1;
      if (bland) {
        for (int j = 0; j < total_; ++j)
          if (improving(j)) {
            q = j;
            break;
          }
      } else {
        double best = 0.0;
        for (int j = 0; j < total_; ++j)
          if (improving(j) && std::abs(d_[j]) > best) {
            best = std::abs(d_[j]);
            q = j;
          }
      }
      if (q < 0) return LpStatus::kOptimal;

      const double dir = state_[q] == VarState::kLower ? 1.0 : -1.0;
      std::fill(alpha_.begin(), alpha_.end(), 0.0);
      for_column(q, [&](int i, double a) {
        for (int r = 0; r < m_; ++r) alpha_[r] += a * binv_(r, i);
      });
      nz_.clear();
      for (int r = 0; r < m_; ++r)
        if (std::abs(alpha_[r]) > kPivotTol) nz_.push_back(r);

      // Basic variable i moves by delta_i * theta.
      auto delta = [&](int r) { return -dir * alpha_[r]; };
      auto ratio = [&](int r, double slack) {
        const int b = basis_[r];
        const double dl = delta(r);
        if (dl < 0.0) return (x_[b] - lo_[b] + slack) / -dl;
        if (up_[b] == kInf) return kInf;
        return (up_[b] - x_[b] + slack) / dl;
      };

      const double range = up_[q] - lo_[q];
      int leave = -1;
      double theta;
      if (bland) {
        theta = kInf;
        for (int r : nz_) {
          const double t = std::max(ratio(r, 0.0), 0.0);
          if (t < theta - 1e-12) {
            theta = t;
            leave = r;
          } else if (t <= theta + 1e-12 && leave >= 0 && basis_[r] < basis_[leave]) {
            leave = r;
          }
        }
      } else {
        double bound = kInf;
        for (int r : nz_) bound = std::min(bound, ratio(r, kHarrisDelta));
        double best_pivot = 0.0;
        for (int r : nz_) {
          if (ratio(r, 0.0) <= bound && std::abs(alpha_[r]) > best_pivot) {
            best_pivot = std::abs(alpha_[r]);
            leave = r;
          }
        }
        theta = leave >= 0 ? std::max(ratio(leave, 0.0), 0.0) : kInf;
      }

      ++iterations_;
      ++since_refresh;
      if (range <= theta) {
        // Bound flip: the entering variable crosses to its other bound.
        if (range == kInf) throw Error("LP unbounded; a bounded relaxation cannot be unbounded");
        theta = range;
        for (int r : nz_) x_[basis_[r]] += delta(r) * theta;
        x_[q] = state_[q] == VarState::kLower ? up_[q] : lo_[q];
        state_[q] = state_[q] == VarState::kLower ? VarState::kUpper : VarState::kLower;
      } else {
        const int r = leave;
        const int out_var = basis_[r];
        for (int i : nz_) x_[basis_[i]] += delta(i) * theta;
        x_[q] += dir * theta;
        // Leaving variable lands on the bound it hit.
        if (delta(r) < 0.0) {
          x_[out_var] = lo_[out_var];
          state_[out_var] = VarState::kLower;
        } else {
          x_[out_var] = up_[out_var];
          state_[out_var] = VarState::kUpper;
        }
        // y += (d_q / alpha_r) * row r of the old inverse.
        const double dual_step = d_[q] / alpha_[r];
        for (int k = 0; k < m_; ++k) y_[k] += dual_step * binv_(r, k);
        const double pivot = alpha_[r];
        for (int k = 0; k < m_; ++k) {
          const double pr = binv_(r, k) / pivot;
          if (pr == 0.0) {
            binv_(r, k) = 0.0;
            continue;
          }
          binv_(r, k) = pr;
          for (int i : nz_)
            if (i != r) binv_(i, k) -= alpha_[i] * pr;
        }
        basis_[r] = q;
        state_[q] = VarState::kBasic;
      }

      const double gain = std::abs(d_[q]) * theta;
      if (gain > 1e-12) {
        stall = 0;
        bland = false;
      } else if (++stall >= kStallLimit) {
        bland = true;
      }
    }
  }

  const LpProblem& p_;
  int n_;
  int m_;
  int total_ = 0;
  int limit_;
  int iterations_ = 0;
  std::vector<double> lo_, up_, x_, cost_, d_, y_, alpha_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  std::vector<int> art_row_;
  std::vector<int> nz_;
  Eigen::MatrixXd binv_;
};

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "?";
}

LpProblem LpProblem::relaxation(const IpInstance& instance, std::span<const std::int8_t> fixings) {
  if (!fixings.empty() && static_cast<int>(fixings.size()) != instance.n_vars())
    throw DimensionError("fixings length does not match n_vars");
  LpProblem p;
  p.n = instance.n_vars();
  p.m = instance.n_cons();
  p.cost.assign(instance.objective().begin(), instance.objective().end());
  p.rhs.assign(instance.rhs().begin(), instance.rhs().end());
  p.lower.assign(p.n, 0.0);
  p.upper.assign(p.n, 1.0);
  for (int j = 0; j < p.n; ++j) {
    if (!fixings.empty() && fixings[j] >= 0) p.lower[j] = p.upper[j] = fixings[j];
    for (const Entry& e : instance.col(j)) {
      p.row_index.push_back(e.index);
      p.value.push_back(e.value);
    }
    p.col_start.push_back(p.row_index.size());
  }
  return p;
}

LpSolution solve_lp(const LpProblem& problem, std::span<const double> start, int iteration_limit) {
  if (!start.empty() && static_cast<int>(start.size()) != problem.n)
    throw DimensionError("LP start point has wrong length");
  for (int j = 0; j < problem.n; ++j)
    if (problem.lower[j] > problem.upper[j]) {
      LpSolution infeasible;
      infeasible.status = LpStatus::kInfeasible;
      infeasible.primal.assign(problem.lower.begin(), problem.lower.end());
      infeasible.reduced_costs.assign(problem.n, 0.0);
      infeasible.basis_status.assign(problem.n, BasisStatus::kLower);
      return infeasible;
    }
  Simplex simplex(problem, start, iteration_limit);
  return simplex.run();
}

LpSolution solve_lp(const IpInstance& instance, std::span<const std::int8_t> fixings, int iteration_limit) {
  return solve_lp(LpProblem::relaxation(instance, fixings), {}, iteration_limit);
}

}  // namespace lns
