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

#include <chrono>
#include <cstddef>

#include "friendlypool/rational.h"

namespace friendlypool {

/// Number of workers a pool should keep active given its share of the
/// machine's CPU time over the last interval:
///
///   clamp(ceil(overcommit * self_delta / all_delta * cpus), 1, max_threads)
///
/// Evaluated in exact integer arithmetic. A zero all_delta (nothing ran)
/// yields max_threads. Negative deltas are treated as zero.
std::size_t compute_active_threads(const Rational& overcommit, std::chrono::nanoseconds self_delta,
                                   std::chrono::nanoseconds all_delta, std::size_t cpus,
                                   std::size_t max_threads);

}  // namespace friendlypool
