// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Monte-Carlo drivers for the theory lab. Trial i uses the seed
// Rng::derive(seed, i), runs independently, and lands in slot i, so a report
// does not depend on the worker count.

#include "lms3/theory_lab.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace lms3::lab {

enum class VerifyKind { kTheorem1, kTheorem2, kBounds, kInfluence };

std::string_view to_string(VerifyKind kind);
VerifyKind parse_verify_kind(std::string_view s);

struct VerifyConfig {
  VerifyKind kind = VerifyKind::kTheorem1;
  std::size_t trials = 1000;
  std::size_t d = 8;
  std::size_t d_prime = 4;
  std::size_t pretrain_size = 256;
  std::size_t k = 3;  // demonstrations per theorem2 trial
  std::uint64_t seed = 0;
  double mu = 1.0;
  double ridge = 1e-6;
  RhsForm form = RhsForm::kCondition;

  void validate() const;
};

inline constexpr double kAdditivityTolerance = 1e-12;
inline constexpr double kInfluenceRelativeTolerance = 1e-3;
inline constexpr double kHalvingRatioLow = 3.5;
inline constexpr double kHalvingRatioHigh = 4.5;

/// Finite-difference comparison of the first-order prediction against the
/// exact retrained loss change at eps = 1/n and eps/2.
struct OracleComparison {
  double influence = 0.0;
  double predicted_delta = 0.0;  // influence * eps
  double oracle_delta = 0.0;
  double oracle_delta_half = 0.0;
  double relative_error = 0.0;  // |oracle - predicted| / |oracle| at eps
  double halving_ratio = 0.0;   // remainder at eps over remainder at eps/2
  double curvature = 0.0;       // Richardson estimate of the eps^2 term
  bool sign_eligible = false;   // |predicted| > 10 |curvature|
  bool sign_agrees = false;
};

OracleComparison compare_with_oracle(const SyntheticTask& task, const Pretrained& model,
                                     std::span<const LabeledPoint> upweighted, const LabeledPoint& test);

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool skipped = false;  // ill-conditioned or singular instance
  bool near = false;
  std::optional<ConditionReport> condition;
  std::optional<BoundChain> chain;
  OracleComparison oracle;
  double singles_sum = 0.0;  // theorem2: sum of the per-demonstration predicted deltas
  double additivity_gap = 0.0;
};

struct VerifySummary {
  std::size_t trials = 0;
  std::size_t skipped = 0;
  std::size_t holds_count = 0;
  std::size_t taylor_violations = 0;
  std::size_t oracle_sign_eligible = 0;
  std::size_t oracle_sign_agreements = 0;
  std::size_t chain_violations = 0;
  std::size_t zero_test_gradients = 0;
  std::size_t additivity_violations = 0;
  double max_additivity_gap = 0.0;
  std::size_t relative_error_passes = 0;
  double max_relative_error = 0.0;
  std::size_t halving_ratio_passes = 0;
  double min_halving_ratio = 0.0;
  double max_halving_ratio = 0.0;
  double max_meta_gradient_gap = 0.0;
  double max_w_hat_gap = 0.0;
};

struct VerifyReport {
  VerifyConfig config;
  std::vector<TrialRecord> records;
  VerifySummary summary;

  /// True when a soundness invariant failed: a Taylor violation, a bound
  /// chain violation, or (theorem2) a broken additivity.
  bool violated() const;
};

VerifyReport run_verification(const VerifyConfig& cfg);

}  // namespace lms3::lab
