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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lnspolicy/ip.hpp"

namespace lns {

// Per-variable bound override used when writing a sub-problem: -1 leaves the
// variable binary, 0 or 1 pins it with an FX bound.
using Fixings = std::vector<std::int8_t>;

// An instance read from MPS together with any variables its BOUNDS section
// pins to a single value.
struct MpsModel {
  IpInstance instance;
  Fixings fixings;
};

// Fixed-format MPS. Names are placed on the standard field columns; numbers
// use the shortest decimal that round-trips, so a field may run past its
// nominal width. The output is a pure function of the instance.
void write_mps(std::ostream& out, const IpInstance& instance, std::span<const std::int8_t> fixings = {});
std::string to_mps(const IpInstance& instance, std::span<const std::int8_t> fixings = {});
void write_mps_file(const std::filesystem::path& path, const IpInstance& instance,
                    std::span<const std::int8_t> fixings = {});

// Accepts fixed or free MPS with N/L/G/E rows. G rows are negated, E rows
// become a <= pair, OBJSENSE MAX negates the objective. Every column must end
// up with bounds inside [0,1]; anything else throws ParseError.
MpsModel read_mps(std::istream& in);
MpsModel read_mps_string(const std::string& text);
MpsModel read_mps_file(const std::filesystem::path& path);

// Plain-text solution: "objective <value>", an optional "status <word>" line,
// then one "<name> <value>" line per variable.
void write_solution(std::ostream& out, const IpInstance& instance, const Solution& solution,
                    const std::string& status = "");
void write_solution_file(const std::filesystem::path& path, const IpInstance& instance,
                         const Solution& solution, const std::string& status = "");

struct ParsedSolution {
  Assignment values;
  std::optional<double> reported_objective;
  std::optional<std::string> status;  // e.g. "optimal"
};

// Reads "name value" pairs; unlisted variables are 0. An optional first line
// "objective <v>" (also "=obj=" or "obj") and a "status <word>" line are
// reported separately. Lines that
// start with '#' are skipped. Unknown names or non-binary values throw ParseError.
ParsedSolution read_solution(std::istream& in, const IpInstance& instance);
ParsedSolution read_solution_file(const std::filesystem::path& path, const IpInstance& instance);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace lns
