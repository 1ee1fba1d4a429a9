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

#include "friendlypool/scaling.h"

#include <algorithm>
#include <stdexcept>

namespace friendlypool {

std::size_t compute_active_threads(const Rational& overcommit, std::chrono::nanoseconds self_delta,
                                   std::chrono::nanoseconds all_delta, std::size_t cpus,
                                   std::size_t max_threads) {
  if (overcommit.num() <= 0) throw std::invalid_argument("overcommit factor must be positive");
  max_threads = std::max<std::size_t>(max_threads, 1);
  if (all_delta.count() <= 0) return max_threads;
  const auto self = static_cast<unsigned __int128>(std::max<std::int64_t>(self_delta.count(), 0));
  const auto all = static_cast<unsigned __int128>(all_delta.count());

  // ceil(a / b) with a = O.num * self * cpus and b = O.den * all.
  unsigned __int128 a = 0;
  if (__builtin_mul_overflow(static_cast<unsigned __int128>(overcommit.num()) * self,
                             static_cast<unsigned __int128>(cpus), &a)) {
    return max_threads;
  }
  const unsigned __int128 b = static_cast<unsigned __int128>(overcommit.den()) * all;
  const unsigned __int128 wanted = a / b + (a % b != 0 ? 1 : 0);
  if (wanted < 1) return 1;
  if (wanted > max_threads) return max_threads;
  return static_cast<std::size_t>(wanted);
}

}  // namespace friendlypool
