// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lms3 {

std::string_view to_string(Polarity p) { return p == Polarity::kMin ? "min" : "max"; }

Polarity parse_polarity(std::string_view s) {
  if (s == "min") return Polarity::kMin;
  if (s == "max") return Polarity::kMax;
  throw std::invalid_argument("unknown polarity: " + std::string(s));
}

void SelectionConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
  score.validate();
}

std::vector<std::size_t> candidate_order(std::span<const ScoredDemonstration> scored, Polarity polarity) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (polarity == Polarity::kMin) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scored[a].score > scored[b].score; });
  }
  return order;
}

SelectionResult select_lms3(std::span<const ScoredDemonstration> scored, const SelectionConfig& cfg) {
  cfg.validate();
  SelectionResult result;
  result.pool_size = scored.size();

  const auto order = candidate_order(scored, cfg.polarity);
  const std::size_t top = std::min(cfg.k, order.size());
  for (std::size_t pos = 0; pos < top; ++pos) {
    const auto& cand = scored[order[pos]];
    if (cand.sim_rank_fraction <= cfg.lambda) {
      result.chosen.push_back(cand);
    } else {
      result.rejected.push_back({cand.id, cand.sim_rank_fraction});
    }
  }
  result.zero_shot = result.chosen.empty();
  return result;
}

std::vector<SweepRow> sweep_lambda(const std::vector<std::vector<ScoredDemonstration>>& scored_per_test,
                                   std::span<const double> lambdas, std::size_t k, Polarity polarity) {
  if (scored_per_test.empty()) throw std::invalid_argument("sweep_lambda: no tests");
  std::vector<SweepRow> rows;
  rows.reserve(lambdas.size());
  const auto n = static_cast<double>(scored_per_test.size());
  for (double lambda : lambdas) {
    SelectionConfig cfg;
    cfg.k = k;
    cfg.lambda = lambda;
    cfg.polarity = polarity;
    cfg.validate();
    double chosen = 0.0;
    double zero_shot = 0.0;
    for (const auto& scored : scored_per_test) {
      const auto r = select_lms3(scored, cfg);
      chosen += static_cast<double>(r.chosen.size());
      zero_shot += r.zero_shot ? 1.0 : 0.0;
    }
    rows.push_back({lambda, chosen / n, zero_shot / n});
  }
  return rows;
}

}  // namespace lms3
