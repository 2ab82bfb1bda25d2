// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/scoring.hpp"

#include "lms3/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lms3 {
namespace {

void require_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

Vector project(const Matrix& w_kq, const Vector& h) { return (w_kq * h).eval(); }

double distance(const Vector& h_test, const Vector& projected) { return (h_test - projected).norm(); }

}  // namespace

std::string_view to_string(ScoreVariant v) {
  return v == ScoreVariant::kProduct ? "product" : "sum";
}

ScoreVariant parse_score_variant(std::string_view s) {
  if (s == "product") return ScoreVariant::kProduct;
  if (s == "sum") return ScoreVariant::kSum;
  throw std::invalid_argument("unknown score variant: " + std::string(s));
}

void ScoreConfig::validate() const {
  if (!std::isfinite(lambda1) || lambda1 < 0.0) {
    throw std::invalid_argument("lambda1 must be finite and >= 0");
  }
}

double sim(const Vector& h_test, const Vector& h, const Matrix& w_kq) {
  require_dims(w_kq.rows() == w_kq.cols() && w_kq.cols() == h.size() && h_test.size() == h.size(),
               "sim: expected h_test, h of length d and w_kq of d x d");
  return distance(h_test, project(w_kq, h));
}

double stab(const Vector& h, const Matrix& w_v, std::size_t d) {
  require_dims(d >= 1 && w_v.cols() == h.size() && static_cast<std::size_t>(h.size()) == d,
               "stab: expected h of length d and w_v of d' x d");
  return (w_v * h).norm() / std::sqrt(static_cast<double>(d));
}

double combine_score(double sim_value, double stab_value, const ScoreConfig& cfg) {
  return cfg.variant == ScoreVariant::kProduct ? sim_value * stab_value
                                               : sim_value + cfg.lambda1 * stab_value;
}

std::vector<double> rank_fractions(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  std::size_t rank = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos == 0 || values[order[pos]] != values[order[pos - 1]]) rank = pos + 1;
    out[order[pos]] = static_cast<double>(rank) / static_cast<double>(n);
  }
  return out;
}

PoolProjection project_pool(const ProjectionBundle& projections, const DemonstrationPool& pool) {
  PoolProjection p;
  p.ids.reserve(pool.size());
  p.projected.reserve(pool.size());
  p.stab.reserve(pool.size());
  for (const auto& item : pool.items) {
    require_dims(static_cast<std::size_t>(item.embedding.size()) == projections.d,
                 "project_pool: embedding length differs from bundle d");
    p.ids.push_back(item.id);
    p.projected.push_back(project(projections.w_kq, item.embedding));
    p.stab.push_back(stab(item.embedding, projections.w_v, projections.d));
  }
  return p;
}

std::vector<ScoredDemonstration> score_pool(const PoolProjection& projection, const Vector& h_test,
                                            const ScoreConfig& cfg) {
  cfg.validate();
  const std::size_t m = projection.ids.size();
  if (m == 0) throw EmptyPoolError("score_pool: empty demonstration pool");

  std::vector<double> sims(m);
  for (std::size_t i = 0; i < m; ++i) {
    require_dims(projection.projected[i].size() == h_test.size(),
                 "score_pool: test embedding length differs from bundle d");
    sims[i] = distance(h_test, projection.projected[i]);
  }
  const auto ranks = rank_fractions(sims);

  std::vector<ScoredDemonstration> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = {projection.ids[i], sims[i], projection.stab[i],
              combine_score(sims[i], projection.stab[i], cfg), ranks[i]};
  }
  return out;
}

std::vector<ScoredDemonstration> score_pool(const ProjectionBundle& projections,
                                            const DemonstrationPool& pool, const TestItem& test,
                                            const ScoreConfig& cfg) {
  if (pool.empty()) throw EmptyPoolError("score_pool: empty demonstration pool");
  return score_pool(project_pool(projections, pool), test.embedding, cfg);
}

std::vector<double> zscore_normalize(std::span<const double> scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw std::invalid_argument("zscore_normalize: need at least two values");
  std::vector<double> out(n, 0.0);
  if (std::all_of(scores.begin(), scores.end(), [&](double s) { return s == scores[0]; })) return out;
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0 || !std::isfinite(sd)) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = (scores[i] - mean) / sd;
  return out;
}

}  // namespace lms3
