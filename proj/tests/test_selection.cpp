// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/rng.hpp"
#include "lms3/selection.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace {

using lms3::Polarity;
using lms3::Rng;
using lms3::ScoredDemonstration;
using lms3::SelectionConfig;
using lms3::SelectionResult;

std::vector<ScoredDemonstration> make_scored(const std::vector<double>& scores, const std::vector<double>& ranks) {
  std::vector<ScoredDemonstration> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back({"d" + std::to_string(i), 0.0, 0.0, scores[i], ranks[i]});
  }
  return out;
}

// Random pool with deliberate score and sim ties.
std::vector<ScoredDemonstration> random_scored(Rng& rng, std::size_t m) {
  std::vector<double> sims(m);
  std::vector<ScoredDemonstration> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    sims[i] = static_cast<double>(rng.below(m));
    out[i].id = "d" + std::to_string(i);
    out[i].sim = sims[i];
    out[i].stab = static_cast<double>(1 + rng.below(4));
    out[i].score = out[i].sim * out[i].stab;
  }
  const auto ranks = lms3::rank_fractions(sims);
  for (std::size_t i = 0; i < m; ++i) out[i].sim_rank_fraction = ranks[i];
  return out;
}

std::vector<std::string> ids(const SelectionResult& r) {
  std::vector<std::string> out;
  for (const auto& c : r.chosen) out.push_back(c.id);
  return out;
}

SelectionConfig config(std::size_t k, double lambda, Polarity p = Polarity::kMin) {
  SelectionConfig c;
  c.k = k;
  c.lambda = lambda;
  c.polarity = p;
  return c;
}

// Independent reference: sort (score, index) pairs, then filter the first k.
std::vector<std::string> reference_select(const std::vector<ScoredDemonstration>& s, std::size_t k, double lambda,
                                          Polarity p) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < s.size(); ++i) keyed.push_back({p == Polarity::kMin ? s[i].score : -s[i].score, i});
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (std::size_t pos = 0; pos < std::min(k, keyed.size()); ++pos) {
    const auto& c = s[keyed[pos].second];
    if (c.sim_rank_fraction <= lambda) out.push_back(c.id);
  }
  return out;
}

TEST(Select, AllPassThreshold) {
  const auto s = make_scored({1, 2, 3, 4, 5}, {0.2, 0.4, 0.6, 0.8, 1.0});
  const auto r = lms3::select_lms3(s, config(2, 0.5));
  EXPECT_EQ(ids(r), (std::vector<std::string>{"d0", "d1"}));
  EXPECT_FALSE(r.zero_shot);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_EQ(r.pool_size, 5u);
}

TEST(Select, BestCandidateRejectedMeansZeroShot) {
  const auto s = make_scored({0.1, 0.5, 0.9}, {0.30, 0.01, 0.5});
  const auto r = lms3::select_lms3(s, config(1, 0.01));
  EXPECT_TRUE(r.chosen.empty());
  EXPECT_TRUE(r.zero_shot);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].id, "d0");
  EXPECT_EQ(r.rejected[0].sim_rank_fraction, 0.30);
}

TEST(Select, RejectedCandidatesAreNotReplaced) {
  const auto s = make_scored({1, 2, 3}, {1.0, 1.0 / 3, 2.0 / 3});
  const auto r = lms3::select_lms3(s, config(2, 0.5));
  EXPECT_EQ(ids(r), (std::vector<std::string>{"d1"}));
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].id, "d0");
}

TEST(Select, VacuousThresholdReturnsWholePoolByScore) {
  const auto s = make_scored({3, 1, 2, 1}, {1.0, 0.25, 0.5, 0.25});
  const auto r = lms3::select_lms3(s, config(4, 1.0));
  EXPECT_EQ(ids(r), (std::vector<std::string>{"d1", "d3", "d2", "d0"}));
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Select, ThresholdBelowOneOverMRejectsEverything) {
  Rng rng(1);
  const auto s = random_scored(rng, 100);
  const auto r = lms3::select_lms3(s, config(5, 1e-6));
  EXPECT_TRUE(r.zero_shot);
  EXPECT_EQ(r.rejected.size(), 5u);
}

TEST(Select, MaxPolarityReversesOrder) {
  const auto s = make_scored({1, 3, 2}, {1.0, 1.0, 1.0});
  EXPECT_EQ(ids(lms3::select_lms3(s, config(2, 1.0, Polarity::kMax))), (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(lms3::parse_polarity("max"), Polarity::kMax);
  EXPECT_EQ(lms3::to_string(Polarity::kMin), "min");
  EXPECT_THROW(lms3::parse_polarity("best"), std::invalid_argument);
}

TEST(Select, EmptyInputIsZeroShot) {
  const auto r = lms3::select_lms3({}, config(3, 0.5));
  EXPECT_TRUE(r.zero_shot);
  EXPECT_EQ(r.pool_size, 0u);
}

TEST(Select, ConfigValidation) {
  EXPECT_THROW(config(0, 0.5).validate(), std::invalid_argument);
  EXPECT_THROW(config(1, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW(config(1, 1.5).validate(), std::invalid_argument);
  EXPECT_NO_THROW(config(1, 1.0).validate());
}

// ---------------------------------------------------------------------------
// Laws over random pools

class SelectionLaws : public ::testing::TestWithParam<Polarity> {};

TEST_P(SelectionLaws, MatchesReferenceAndInvariants) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto m = 1 + rng.below(30);
    const auto s = random_scored(rng, m);
    const auto k = 1 + rng.below(m + 2);
    const double lambda = (1 + rng.below(100)) / 100.0;
    const auto r = lms3::select_lms3(s, config(k, lambda, GetParam()));
    EXPECT_EQ(ids(r), reference_select(s, k, lambda, GetParam()));
    EXPECT_LE(r.chosen.size(), k);
    EXPECT_EQ(r.zero_shot, r.chosen.empty());
    EXPECT_EQ(r.chosen.size() + r.rejected.size(), std::min<std::size_t>(k, m));
    const auto chosen_ids = ids(r);
    const std::set<std::string> chosen(chosen_ids.begin(), chosen_ids.end());
    for (const auto& c : r.chosen) EXPECT_LE(c.sim_rank_fraction, lambda);
    for (const auto& x : r.rejected) {
      EXPECT_GT(x.sim_rank_fraction, lambda);
      EXPECT_EQ(chosen.count(x.id), 0u);
    }
  }
}

TEST_P(SelectionLaws, LambdaMonotoneSubsets) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto m = 1 + rng.below(40);
    const auto s = random_scored(rng, m);
    const auto k = 1 + rng.below(m);
    std::vector<std::string> prev;
    for (double lambda : {0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0}) {
      auto cur = ids(lms3::select_lms3(s, config(k, lambda, GetParam())));
      std::set<std::string> cur_set(cur.begin(), cur.end());
      for (const auto& id : prev) EXPECT_EQ(cur_set.count(id), 1u) << "lambda " << lambda;
      prev = std::move(cur);
    }
  }
}

TEST_P(SelectionLaws, KPrefix) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto m = 1 + rng.below(30);
    const auto s = random_scored(rng, m);
    const double lambda = (1 + rng.below(100)) / 100.0;
    for (std::size_t k = 1; k < m; ++k) {
      const auto a = ids(lms3::select_lms3(s, config(k, lambda, GetParam())));
      const auto b = ids(lms3::select_lms3(s, config(k + 1, lambda, GetParam())));
      ASSERT_LE(a.size(), b.size());
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

// Selecting k equals taking the full-pool choice and keeping those among the
// top-k score candidates: each candidate is judged on its own.
TEST_P(SelectionLaws, CandidatesAreJudgedIndependently) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto m = 1 + rng.below(30);
    const auto s = random_scored(rng, m);
    const double lambda = (1 + rng.below(100)) / 100.0;
    const auto full = ids(lms3::select_lms3(s, config(m, lambda, GetParam())));
    const auto order = lms3::candidate_order(s, GetParam());
    for (std::size_t k = 1; k <= m; ++k) {
      std::set<std::string> top;
      for (std::size_t i = 0; i < k; ++i) top.insert(s[order[i]].id);
      std::vector<std::string> expect;
      for (const auto& id : full)
        if (top.count(id)) expect.push_back(id);
      EXPECT_EQ(ids(lms3::select_lms3(s, config(k, lambda, GetParam()))), expect);
    }
  }
}

TEST_P(SelectionLaws, PermutationEquivariantAndDeterministic) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const auto m = 2 + rng.below(30);
    // Distinct scores so pool order never decides; ties are checked separately.
    auto s = random_scored(rng, m);
    for (std::size_t i = 0; i < m; ++i) s[i].score += 1e-3 * static_cast<double>(i);
    const auto k = 1 + rng.below(m);
    const double lambda = (1 + rng.below(100)) / 100.0;
    const auto r = lms3::select_lms3(s, config(k, lambda, GetParam()));
    const auto again = lms3::select_lms3(s, config(k, lambda, GetParam()));
    EXPECT_EQ(ids(r), ids(again));

    auto shuffled = s;
    for (std::size_t i = m - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    EXPECT_EQ(ids(lms3::select_lms3(shuffled, config(k, lambda, GetParam()))), ids(r));
  }
}

INSTANTIATE_TEST_SUITE_P(Polarities, SelectionLaws, ::testing::Values(Polarity::kMin, Polarity::kMax));

TEST(Select, TiesBrokenByPoolOrder) {
  const auto s = make_scored({2, 1, 1, 1}, {1, 1, 1, 1});
  EXPECT_EQ(ids(lms3::select_lms3(s, config(2, 1.0))), (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(ids(lms3::select_lms3(s, config(2, 1.0, Polarity::kMax))), (std::vector<std::string>{"d0", "d1"}));
}

// ---------------------------------------------------------------------------

TEST(Sweep, ThresholdStraddling) {
  const std::vector<std::vector<ScoredDemonstration>> per_test{make_scored({1.0}, {0.5})};
  const std::vector<double> lambdas{0.4, 0.6};
  const auto rows = lms3::sweep_lambda(per_test, lambdas, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].zero_shot_rate, 1.0);
  EXPECT_EQ(rows[1].zero_shot_rate, 0.0);
  EXPECT_EQ(rows[0].lambda, 0.4);
}

TEST(Sweep, MatchesEnumeration) {
  Rng rng(7);
  std::vector<std::vector<ScoredDemonstration>> per_test;
  for (int i = 0; i < 3; ++i) per_test.push_back(random_scored(rng, 10));
  const std::vector<double> lambdas{0.1, 0.3, 0.7, 1.0};
  const auto rows = lms3::sweep_lambda(per_test, lambdas, 3);
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    double chosen = 0, zero = 0;
    for (const auto& s : per_test) {
      const auto c = reference_select(s, 3, lambdas[j], Polarity::kMin);
      chosen += static_cast<double>(c.size());
      zero += c.empty() ? 1 : 0;
    }
    EXPECT_DOUBLE_EQ(rows[j].mean_chosen, chosen / 3);
    EXPECT_DOUBLE_EQ(rows[j].zero_shot_rate, zero / 3);
  }
}

TEST(Sweep, MonotoneColumns) {
  Rng rng(8);
  std::vector<std::vector<ScoredDemonstration>> per_test;
  for (int i = 0; i < 20; ++i) per_test.push_back(random_scored(rng, 1 + rng.below(50)));
  const std::vector<double> lambdas{0.01, 0.05, 0.10, 0.20, 0.40, 0.60, 0.80, 1.00};
  const auto rows = lms3::sweep_lambda(per_test, lambdas, 4);
  for (std::size_t j = 1; j < rows.size(); ++j) {
    EXPECT_GE(rows[j].mean_chosen, rows[j - 1].mean_chosen);
    EXPECT_LE(rows[j].zero_shot_rate, rows[j - 1].zero_shot_rate);
  }
  EXPECT_EQ(rows.back().zero_shot_rate, 0.0);
}

TEST(Sweep, Errors) {
  const std::vector<double> lambdas{0.5};
  EXPECT_THROW(lms3::sweep_lambda({}, lambdas, 1), std::invalid_argument);
  const std::vector<std::vector<ScoredDemonstration>> per_test{make_scored({1.0}, {1.0})};
  const std::vector<double> bad{1.5};
  EXPECT_THROW(lms3::sweep_lambda(per_test, bad, 1), std::invalid_argument);
}

}  // namespace
