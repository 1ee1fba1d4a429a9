/*
 * Copyright 2026 The friendlypool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <sys/types.h>

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace friendlypool {

/// A spawned child whose stdin and stdout are pipes owned by the parent.
/// stderr is inherited. The destructor kills and reaps a still-running child.
class ChildProcess {
 public:
  /// argv[0] is the executable path. Throws std::system_error on failure.
  static ChildProcess spawn(const std::vector<std::string>& argv);

  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess();

  pid_t pid() const noexcept { return pid_; }

  /// Writes `line` plus '\n'. Returns false if the child closed its stdin.
  bool write_line(std::string_view line);
  void close_stdin();

  /// Next line without its terminator; nullopt on timeout or end of stream
  /// (check eof()).
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);
  bool eof() const noexcept { return eof_; }

  /// Blocks until exit. Returns the exit code, or 128 + signal number.
  int wait();
  void kill() noexcept;

 private:
  ChildProcess() = default;
  void reset() noexcept;

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
  std::optional<int> status_;
};

}  // namespace friendlypool
