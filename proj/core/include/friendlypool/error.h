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

#include <stdexcept>
#include <string>

namespace friendlypool {

/// Raised when text read from the OS (cgroup files, proc files, CSV rows)
/// does not match the expected format. Carries the offending input verbatim.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string text)
      : std::runtime_error(what + ": '" + text + "'"), text_(std::move(text)) {}

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

/// Raised by FriendlyPool::submit once the pool has been shut down.
class RejectedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace friendlypool
