// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace lms3 {

/// Worker count: LMS3_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) over worker_count() threads. Each index is
/// visited exactly once; callers write results into slot i so the observable
/// output is independent of scheduling. The exception from the lowest failing
/// index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace lms3
