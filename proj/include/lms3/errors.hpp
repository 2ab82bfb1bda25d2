// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace lms3 {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by score_pool on an empty pool; callers fall back to zero-shot.
class EmptyPoolError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lms3
