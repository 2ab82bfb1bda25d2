// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lms3/bundle.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lms3 {

enum class ScoreVariant { kProduct, kSum };

std::string_view to_string(ScoreVariant v);
ScoreVariant parse_score_variant(std::string_view s);

struct ScoreConfig {
  ScoreVariant variant = ScoreVariant::kProduct;
  double lambda1 = 1.0;  // weight on stab, sum variant only

  void validate() const;
};

struct ScoredDemonstration {
  std::string id;
  double sim = 0.0;
  double stab = 0.0;
  double score = 0.0;
  double sim_rank_fraction = 0.0;  // min-rank of sim (ascending) over M
};

/// LLM-oriented similarity: || h_test - w_kq h ||.
double sim(const Vector& h_test, const Vector& h, const Matrix& w_kq);

/// Inference stability: || w_v h || / sqrt(d).
double stab(const Vector& h, const Matrix& w_v, std::size_t d);

double combine_score(double sim_value, double stab_value, const ScoreConfig& cfg);

/// 1-based ascending rank with ties sharing the minimum rank, divided by n.
std::vector<double> rank_fractions(std::span<const double> values);

/// Test-independent part of the scores. Every demonstration is projected
/// once, so scoring N tests against M demonstrations costs O(M + N) model
/// encodings and O(M) vector work per test.
struct PoolProjection {
  std::vector<std::string> ids;
  std::vector<Vector> projected;  // w_kq h_i
  std::vector<double> stab;       // ||w_v h_i|| / sqrt(d)
};

PoolProjection project_pool(const ProjectionBundle& projections, const DemonstrationPool& pool);

std::vector<ScoredDemonstration> score_pool(const PoolProjection& projection, const Vector& h_test,
                                            const ScoreConfig& cfg);

/// Throws EmptyPoolError for M = 0.
std::vector<ScoredDemonstration> score_pool(const ProjectionBundle& projections,
                                            const DemonstrationPool& pool, const TestItem& test,
                                            const ScoreConfig& cfg);

/// Sample z-score (n - 1 denominator). Constant input maps to zeros.
std::vector<double> zscore_normalize(std::span<const double> scores);

}  // namespace lms3
