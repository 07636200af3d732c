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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lns {

inline constexpr double kFeasibilityTol = 1e-6;
inline constexpr double kObjectiveTol = 1e-9;

// One nonzero of a sparse row (index = variable) or column (index = row).
struct Entry {
  int index = 0;
  double value = 0.0;
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Binary minimization problem  min c'x  s.t.  Ax <= b,  x in {0,1}^n.
//
// Immutable after construction. The matrix is held both row-major and
// column-major since B&B, the LP and the GCN walk it in both directions.
class IpInstance {
 public:
  IpInstance() = default;
  // Duplicate (row, col) triplets are summed. Throws DimensionError on an
  // out-of-range index and ContractError on a non-finite coefficient.
  IpInstance(std::string name, std::vector<double> objective,
             std::vector<double> rhs, std::vector<Triplet> triplets,
             std::vector<std::string> var_names = {},
             std::vector<std::string> con_names = {});

  const std::string& name() const { return name_; }
  int n_vars() const { return static_cast<int>(objective_.size()); }
  int n_cons() const { return static_cast<int>(rhs_.size()); }
  std::size_t nnz() const { return row_entries_.size(); }

  std::span<const double> objective() const { return objective_; }
  std::span<const double> rhs() const { return rhs_; }
  std::span<const Entry> row(int j) const {
    return {row_entries_.data() + row_start_[j],
            row_entries_.data() + row_start_[j + 1]};
  }
  std::span<const Entry> col(int i) const {
    return {col_entries_.data() + col_start_[i],
            col_entries_.data() + col_start_[i + 1]};
  }

  // Synthesized as x<i> / c<j> when the instance was built without names.
  std::string var_name(int i) const;
  std::string con_name(int j) const;
  bool has_names() const { return !var_names_.empty(); }

  std::vector<Triplet> triplets() const;
  // True when every objective coefficient is integral, which lets bounding
  // round LP values up.
  bool integral_objective() const { return integral_objective_; }

 private:
  std::string name_;
  std::vector<double> objective_;
  std::vector<double> rhs_;
  std::vector<std::size_t> row_start_{0};
  std::vector<Entry> row_entries_;
  std::vector<std::size_t> col_start_{0};
  std::vector<Entry> col_entries_;
  std::vector<std::string> var_names_;
  std::vector<std::string> con_names_;
  bool integral_objective_ = true;
};

using Assignment = std::vector<std::uint8_t>;

// c'x as a plain floating dot product. Throws DimensionError on length mismatch.
double evaluate(const IpInstance& instance, std::span<const std::uint8_t> values);

// Every row satisfies (Ax)_j <= b_j + tol.
bool is_feasible(const IpInstance& instance, std::span<const std::uint8_t> values,
                 double tol = kFeasibilityTol);

// Largest violation max_j ((Ax)_j - b_j), or -inf for an instance without rows.
double max_violation(const IpInstance& instance, std::span<const std::uint8_t> values);

struct Solution {
  Assignment values;
  double objective_value = 0.0;

  static Solution of(const IpInstance& instance, Assignment values);
  int size() const { return static_cast<int>(values.size()); }
};

// Best solution seen in an episode plus per-variable sums over every
// accepted incumbent (the "average incumbent value" feature).
class IncumbentTracker {
 public:
  IncumbentTracker() = default;
  // The initial solution counts as the first incumbent.
  explicit IncumbentTracker(Solution initial);

  // Accepts the candidate only if it improves on the best by more than
  // kObjectiveTol. Throws ContractError if the candidate is infeasible.
  bool record(const IpInstance& instance, const Solution& candidate);

  const Solution& best() const { return best_; }
  std::span<const double> history_sum() const { return history_sum_; }
  int history_count() const { return history_count_; }
  double average(int i) const { return history_sum_[i] / history_count_; }

 private:
  Solution best_;
  std::vector<double> history_sum_;
  int history_count_ = 0;
};

// Free-function form mirroring IncumbentTracker::record.
bool record_incumbent(const IpInstance& instance, IncumbentTracker& tracker,
                      const Solution& candidate);

}  // namespace lns
