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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/mps.hpp"
#include "lnspolicy/repair.hpp"

namespace lns {
namespace {

std::string shell_quote(const std::string& s) {
  bool safe = !s.empty();
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '/' || ch == '-'))
      safe = false;
  if (safe) return s;
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "'\\''";
    else out += ch;
  }
  return out + "'";
}

std::string expand(const std::string& tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    bool matched = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, value] : vars) {
        const std::string token = "{" + key + "}";
        if (tmpl.compare(i, token.size(), token) == 0) {
          out += value;
          i += token.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += tmpl[i++];
  }
  return out;
}

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;
};

ProcessResult run_shell(const std::string& command, double timeout_seconds) {
  int fds[2];
  if (pipe(fds) != 0) throw AdapterError(std::string("pipe failed: ") + std::strerror(errno), "");
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw AdapterError(std::string("fork failed: ") + std::strerror(errno), "");
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(fds[1]);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  char buf[4096];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    const ssize_t got = read(fds[0], buf, sizeof buf);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) break;
    result.output.append(buf, static_cast<std::size_t>(got));
  }
  if (result.timed_out) kill(-pid, SIGKILL);
  close(fds[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (result.timed_out) return result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
  return result;
}

std::mutex& directory_lock(const std::filesystem::path& dir) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::lock_guard<std::mutex> guard(registry_mutex);
  auto& slot = locks[std::filesystem::absolute(dir).lexically_normal().string()];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

}  // namespace

SubIpResult external_repair(const SubIpRequest& request, const ExternalRepairOptions& options) {
  if (request.instance == nullptr) throw ContractError("external_repair: request has no instance");
  const IpInstance& instance = *request.instance;
  const int n = instance.n_vars();
  if (static_cast<int>(request.free_mask.size()) != n || request.warm_start.size() != n)
    throw DimensionError("external_repair: free mask / warm start length does not match n_vars");
  if (!is_feasible(instance, request.warm_start.values))
    throw ContractError("external_repair: warm start is infeasible");
  if (options.command_template.empty()) throw ConfigError("external_repair: empty command template");

  SubIpResult result;
  result.solution = request.warm_start;
  result.bound = -std::numeric_limits<double>::infinity();
  if (request.time_limit <= 0.0) {
    result.status = SubIpStatus::kTimeLimit;
    return result;
  }

  std::lock_guard<std::mutex> guard(directory_lock(options.work_dir));
  static std::atomic<long> counter{0};
  const std::string stem = "lnspolicy_subip_" + std::to_string(getpid()) + "_" + std::to_string(counter++);
  const auto mps_path = options.work_dir / (stem + ".mps");
  const auto sol_path = options.work_dir / (stem + ".sol");
  std::filesystem::remove(sol_path);

  Fixings fixings(n, -1);
  for (int i = 0; i < n; ++i)
    if (!request.free_mask[i]) fixings[i] = static_cast<std::int8_t>(request.warm_start.values[i]);
  write_mps_file(mps_path, instance, fixings);

  const std::string command = expand(options.command_template, {{"mps", shell_quote(mps_path.string())},
                                                                 {"sol", shell_quote(sol_path.string())},
                                                                 {"tl", format_double(request.time_limit)}});
  const auto start = std::chrono::steady_clock::now();
  const ProcessResult proc = run_shell(command, request.time_limit + kExternalGraceSeconds);
  result.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto cleanup = [&] {
    std::error_code ec;
    std::filesystem::remove(mps_path, ec);
    std::filesystem::remove(sol_path, ec);
  };
  if (proc.timed_out) {
    cleanup();
    throw AdapterError("external solver exceeded time limit plus grace", proc.output);
  }
  if (proc.exit_code != 0) {
    cleanup();
    throw AdapterError("external solver exited with code " + std::to_string(proc.exit_code), proc.output);
  }
  ParsedSolution parsed;
  try {
    parsed = read_solution_file(sol_path, instance);
  } catch (const Error& e) {
    cleanup();
    throw AdapterError(std::string("unreadable solution file: ") + e.what(), proc.output);
  }
  cleanup();

  for (int i = 0; i < n; ++i)
    if (!request.free_mask[i] && parsed.values[i] != request.warm_start.values[i])
      throw AdapterError("external solution changes fixed variable " + instance.var_name(i), proc.output);
  if (!is_feasible(instance, parsed.values))
    throw AdapterError("external solution is infeasible", proc.output);

  Solution candidate = Solution::of(instance, std::move(parsed.values));
  const bool optimal = parsed.status && *parsed.status == "optimal";
  if (candidate.objective_value < request.warm_start.objective_value) result.solution = std::move(candidate);
  result.status = optimal ? SubIpStatus::kOptimal : SubIpStatus::kTimeLimit;
  if (optimal) result.bound = result.solution.objective_value;
  return result;
}

}  // namespace lns
