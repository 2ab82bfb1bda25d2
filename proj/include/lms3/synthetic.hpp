// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded generators for the theory lab and for synthetic bundles. All draws
// come from lms3::Rng, so a seed reproduces an instance bit for bit.

#include "lms3/bundle.hpp"
#include "lms3/rng.hpp"
#include "lms3/theory_lab.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lms3::lab {

struct TrialConfig {
  std::size_t d = 8;
  std::size_t d_prime = 4;
  std::size_t pretrain_size = 256;
  std::size_t k = 1;
  double ridge = 1e-6;
  double noise = 0.1;

  void validate() const;
};

/// Pretraining inputs i.i.d. N(0, 1) and targets W* z + noise * N(0, 1) for a
/// planted W* with N(0, 1) entries.
SyntheticTask random_task(const TrialConfig& cfg, Rng& rng, Mat* planted = nullptr);

/// One instance for the sufficient-condition checks.
///
/// The pretraining targets are built so that the regularised optimum equals
/// the implicit initial weights W_0 = (W_V/sqrt d) h_test (w_kq h_test)^T
/// exactly, and every point (test and demonstrations) is scored against one
/// common target tau = W_0 w_kq h_1 - (W_V/sqrt d) h_1. Under that
/// construction the residual at each z_i = w_kq h_i is the meta-gradient
/// (W_V/sqrt d) h_i and grad_F L is 1-Lipschitz in F, so the hypotheses of
/// the condition hold as stated rather than approximately.
///
/// h_test and h_1 are N(0, I). In half of the trials w_kq receives a rank-one
/// correction that puts w_kq h_1 at distance about 10^U(-3, 0) from h_test,
/// so both outcomes of the condition are exercised. Further demonstrations
/// move h_1 inside the null space of W_0 w_kq - W_V/sqrt d, which keeps their
/// residuals exact.
struct TheoryTrial {
  SyntheticTask task;
  IclProbe probe;
  std::vector<Vec> demos;
  bool near = false;
};

TheoryTrial make_theory_trial(const TrialConfig& cfg, std::uint64_t seed);

/// Generic random task with one upweighted point and a test point, both
/// labelled through the planted map plus noise.
struct InfluenceTrial {
  SyntheticTask task;
  LabeledPoint upweighted;
  LabeledPoint test;
};

InfluenceTrial make_influence_trial(const TrialConfig& cfg, std::uint64_t seed);

}  // namespace lms3::lab

namespace lms3 {

struct SyntheticBundleConfig {
  std::size_t d = 8;
  std::size_t d_prime = 4;
  std::size_t m = 20;
  std::size_t n = 3;
};

/// Random projections and embeddings (N(0, 1) entries) with short generated
/// arithmetic problems as texts. Ids are demo-0000.. and test-0000..
Bundle synthetic_bundle(const SyntheticBundleConfig& cfg, std::uint64_t seed);

}  // namespace lms3
