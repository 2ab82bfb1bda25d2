// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lms3/scoring.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lms3 {

/// Which end of the score order is "best". kMin is the default: the score
/// is an upper-bound surrogate for the loss, so smaller is better.
enum class Polarity { kMin, kMax };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view s);

struct SelectionConfig {
  std::size_t k = 1;
  double lambda = 1.0;  // rejection threshold on sim_rank_fraction, in (0, 1]
  ScoreConfig score;
  Polarity polarity = Polarity::kMin;

  void validate() const;
};

struct RejectedDemonstration {
  std::string id;
  double sim_rank_fraction = 0.0;
};

struct SelectionResult {
  std::string test_id;
  std::vector<ScoredDemonstration> chosen;  // best score first
  std::vector<RejectedDemonstration> rejected;
  bool zero_shot = true;
  std::size_t pool_size = 0;
};

/// Pool indices ordered best score first; ties keep pool order.
std::vector<std::size_t> candidate_order(std::span<const ScoredDemonstration> scored, Polarity polarity);

/// Top-k by score with relative-rank rejection. Each of the k best-scored
/// candidates is kept iff its sim_rank_fraction <= lambda; rejected
/// candidates are not replaced by lower-ranked ones, so the prompt shrinks
/// and an empty choice means zero-shot.
SelectionResult select_lms3(std::span<const ScoredDemonstration> scored, const SelectionConfig& cfg);

struct SweepRow {
  double lambda = 0.0;
  double mean_chosen = 0.0;
  double zero_shot_rate = 0.0;
};

/// Aggregates selection statistics over tests for each threshold.
std::vector<SweepRow> sweep_lambda(const std::vector<std::vector<ScoredDemonstration>>& scored_per_test,
                                   std::span<const double> lambdas, std::size_t k,
                                   Polarity polarity = Polarity::kMin);

}  // namespace lms3
