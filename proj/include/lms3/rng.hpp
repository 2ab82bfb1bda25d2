// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace lms3 {

/// Seeded generator shared by every randomized component.
///
/// The bit stream is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. The derived distributions are implemented here rather than
/// through <random>'s distribution classes (which are implementation
/// defined), so a given seed yields the same draws on every toolchain:
///
///   uniform()  = (next_u64() >> 11) * 2^-53                  in [0, 1)
///   normal()   = Box-Muller on (1 - uniform(), uniform()),   cos branch
///                first, sin branch cached for the next call
///   below(n)   = Lemire multiply-shift with rejection        in [0, n)
///   derive()   = splitmix64(seed ^ splitmix64(stream))      per-trial seeds
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t n);

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace lms3
