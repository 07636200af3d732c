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

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "lnspolicy/errors.hpp"
#include "lnspolicy/tensor.hpp"

namespace lns {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "lnspolicy-checkpoint";
constexpr int kVersion = 1;

void put_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw ParseError("checkpoint payload truncated");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

json read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty checkpoint");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion)
    throw ParseError(path + ": not a version-1 lnspolicy checkpoint");
  return header;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params, const std::string& meta_json) {
  json header;
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["meta"] = meta_json.empty() ? json::object() : json::parse(meta_json);
  json plist = json::array();
  for (std::size_t i = 0; i < params.size(); ++i)
    plist.push_back({{"name", params[i].name}, {"shape", {params[i].value.rows(), params[i].value.cols()}}});
  header["parameters"] = plist;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& v = params[i].value;
    for (Eigen::Index k = 0; k < v.size(); ++k) put_le(out, v.data()[k]);
  }
  if (!out) throw Error("write failed: " + path);
}

std::string load_checkpoint(const std::string& path, ParameterSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  const json header = read_header(in, path);
  const json& plist = header.at("parameters");
  if (plist.size() != params.size())
    throw ParseError(path + ": checkpoint has " + std::to_string(plist.size()) + " parameters, model has " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = plist[i].at("name");
    const auto rows = plist[i].at("shape")[0].get<Eigen::Index>();
    const auto cols = plist[i].at("shape")[1].get<Eigen::Index>();
    if (name != params[i].name || rows != params[i].value.rows() || cols != params[i].value.cols())
      throw ParseError(path + ": census mismatch at parameter " + std::to_string(i) + " (checkpoint " + name +
                       " " + std::to_string(rows) + "x" + std::to_string(cols) + ", model " + params[i].name +
                       " " + std::to_string(params[i].value.rows()) + "x" +
                       std::to_string(params[i].value.cols()) + ")");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& v = params[i].value;
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = get_le(in);
  }
  return header.value("meta", json::object()).dump();
}

std::string read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  return read_header(in, path).value("meta", json::object()).dump();
}

}  // namespace lns
