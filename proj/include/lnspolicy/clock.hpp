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

#include <chrono>
#include <cstddef>
#include <string>

namespace lns {

// Wall time, or deterministic "work seconds" charged per simplex pivot and
// B&B node. Work time makes budgets reproducible across runs and machines.
enum class TimeSource { kWall, kWork };

TimeSource parse_time_source(const std::string& name);  // "wall" | "work"
const char* to_string(TimeSource source);

// Work-clock cost model, fitted against wall time on one core of the
// development machine (g++ -O2).
inline constexpr double kWorkPerPivotNonzero = 2e-8;
inline constexpr double kWorkPerPivot = 1e-5;
inline constexpr double kWorkPerNode = 2e-5;
inline constexpr double kWorkPerReducedEntry = 2.5e-8;  // n + m + nnz of the full instance
inline constexpr double kWorkPerGraphNode = 2e-5;       // policy forward pass, per variable or constraint
inline constexpr double kWorkPerUpdateNode = 1e-4;      // actor and critic step, per node of one transition

class Stopwatch {
 public:
  explicit Stopwatch(TimeSource source = TimeSource::kWall)
      : source_(source), start_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    if (source_ == TimeSource::kWork) return work_;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  // No-op on the wall clock.
  void charge(double work_seconds) { work_ += work_seconds; }
  void charge_pivots(long pivots, std::size_t nonzeros) {
    work_ += static_cast<double>(pivots) * (kWorkPerPivot + kWorkPerPivotNonzero * static_cast<double>(nonzeros));
  }
  TimeSource source() const { return source_; }

 private:
  TimeSource source_;
  std::chrono::steady_clock::time_point start_;
  double work_ = 0.0;
};

}  // namespace lns
