// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/verify.hpp"

#include "lms3/errors.hpp"
#include "lms3/parallel.hpp"
#include "lms3/rng.hpp"
#include "lms3/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lms3::lab {
namespace {

double ratio_or_inf(double num, double den) {
  if (den != 0.0) return num / den;
  return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

TrialConfig trial_config(const VerifyConfig& cfg) {
  TrialConfig t;
  t.d = cfg.d;
  t.d_prime = cfg.d_prime;
  t.pretrain_size = cfg.pretrain_size;
  t.k = cfg.kind == VerifyKind::kTheorem2 ? cfg.k : 1;
  t.ridge = cfg.ridge;
  return t;
}

void run_theory_trial(const VerifyConfig& cfg, TrialRecord& rec) {
  const TheoryTrial trial = make_theory_trial(trial_config(cfg), rec.seed);
  rec.near = trial.near;
  const Pretrained model = pretrain(trial.task);

  if (cfg.kind == VerifyKind::kBounds) {
    rec.chain = bound_chain(model, trial.probe, trial.demos.front(), cfg.mu);
    return;
  }

  std::vector<LabeledPoint> upweighted;
  for (const auto& h : trial.demos) upweighted.push_back({trial.probe.w_kq * h, trial.probe.target});
  const LabeledPoint test{trial.probe.h_test, trial.probe.target};

  if (cfg.kind == VerifyKind::kTheorem1) {
    rec.condition = check_theorem1(trial.task, model, trial.probe, trial.demos.front(), cfg.mu, cfg.form);
  } else {
    rec.condition = check_theorem2(trial.task, model, trial.probe, trial.demos, cfg.mu, cfg.form);
    double sum = 0.0;
    for (const auto& h : trial.demos) {
      sum += check_theorem1(trial.task, model, trial.probe, h, cfg.mu, cfg.form).predicted_delta;
    }
    rec.singles_sum = sum;
    rec.additivity_gap = std::abs(rec.condition->predicted_delta - sum);
  }
  rec.oracle = compare_with_oracle(trial.task, model, upweighted, test);
}

void run_influence_trial(const VerifyConfig& cfg, TrialRecord& rec) {
  const InfluenceTrial trial = make_influence_trial(trial_config(cfg), rec.seed);
  const Pretrained model = pretrain(trial.task);
  rec.oracle = compare_with_oracle(trial.task, model, std::span<const LabeledPoint>(&trial.upweighted, 1),
                                   trial.test);
}

}  // namespace

std::string_view to_string(VerifyKind kind) {
  switch (kind) {
    case VerifyKind::kTheorem1: return "theorem1";
    case VerifyKind::kTheorem2: return "theorem2";
    case VerifyKind::kBounds: return "bounds";
    case VerifyKind::kInfluence: return "influence";
  }
  return "unknown";
}

VerifyKind parse_verify_kind(std::string_view s) {
  for (auto k : {VerifyKind::kTheorem1, VerifyKind::kTheorem2, VerifyKind::kBounds, VerifyKind::kInfluence}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown verification '" + std::string(s) +
                              "' (expected theorem1, theorem2, bounds or influence)");
}

void VerifyConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (d < 1 || d_prime < 1) throw std::invalid_argument("d and dprime must be >= 1");
  if (pretrain_size < d) throw std::invalid_argument("dpre must be >= d");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!std::isfinite(mu) || mu < 0.0) throw std::invalid_argument("mu must be finite and >= 0");
  if (!std::isfinite(ridge) || ridge < 0.0) throw std::invalid_argument("ridge must be finite and >= 0");
}

OracleComparison compare_with_oracle(const SyntheticTask& task, const Pretrained& model,
                                     std::span<const LabeledPoint> upweighted, const LabeledPoint& test) {
  const double eps = 1.0 / static_cast<double>(task.size());
  const double base = squared_loss(model.w_hat, test);
  OracleComparison c;
  c.influence = influence(model, upweighted, test);
  c.predicted_delta = c.influence * eps;
  c.oracle_delta = retrain_oracle(task, upweighted, eps, test).test_loss - base;
  c.oracle_delta_half = retrain_oracle(task, upweighted, 0.5 * eps, test).test_loss - base;
  const double remainder = c.oracle_delta - c.predicted_delta;
  const double remainder_half = c.oracle_delta_half - 0.5 * c.predicted_delta;
  c.relative_error = ratio_or_inf(std::abs(remainder), std::abs(c.oracle_delta));
  c.halving_ratio = ratio_or_inf(std::abs(remainder), std::abs(remainder_half));
  c.curvature = 2.0 * (c.oracle_delta - 2.0 * c.oracle_delta_half);
  c.sign_eligible = std::abs(c.predicted_delta) > 10.0 * std::abs(c.curvature);
  c.sign_agrees = c.oracle_delta != 0.0 && (c.oracle_delta < 0.0) == (c.predicted_delta < 0.0);
  return c;
}

bool VerifyReport::violated() const {
  return summary.taylor_violations > 0 || summary.chain_violations > 0 ||
         (config.kind == VerifyKind::kTheorem2 && summary.additivity_violations > 0);
}

VerifyReport run_verification(const VerifyConfig& cfg) {
  cfg.validate();
  VerifyReport report;
  report.config = cfg;
  report.records.resize(cfg.trials);

  parallel_for(cfg.trials, [&](std::size_t i) {
    TrialRecord& rec = report.records[i];
    rec.index = i;
    rec.seed = Rng::derive(cfg.seed, i);
    try {
      if (cfg.kind == VerifyKind::kInfluence) {
        run_influence_trial(cfg, rec);
      } else {
        run_theory_trial(cfg, rec);
      }
    } catch (const SingularSystemError&) {
      rec.skipped = true;
    } catch (const IllConditionedError&) {
      rec.skipped = true;
    }
  });

  VerifySummary& s = report.summary;
  s.trials = cfg.trials;
  bool first_ratio = true;
  for (const auto& rec : report.records) {
    if (rec.skipped) {
      ++s.skipped;
      continue;
    }
    if (rec.chain && !rec.chain->chain_ok) ++s.chain_violations;
    if (cfg.kind == VerifyKind::kBounds) continue;

    if (rec.condition) {
      const auto& c = *rec.condition;
      if (c.holds) ++s.holds_count;
      if (c.holds && !(c.predicted_delta < 0.0)) ++s.taylor_violations;
      if (c.zero_test_gradient) ++s.zero_test_gradients;
      s.max_meta_gradient_gap = std::max(s.max_meta_gradient_gap, c.meta_gradient_gap);
      s.max_w_hat_gap = std::max(s.max_w_hat_gap, c.w_hat_gap);
    }
    if (cfg.kind == VerifyKind::kTheorem2) {
      if (!(rec.additivity_gap <= kAdditivityTolerance)) ++s.additivity_violations;
      s.max_additivity_gap = std::max(s.max_additivity_gap, rec.additivity_gap);
    }
    const auto& o = rec.oracle;
    if (o.sign_eligible) {
      ++s.oracle_sign_eligible;
      if (o.sign_agrees) ++s.oracle_sign_agreements;
    }
    if (o.relative_error <= kInfluenceRelativeTolerance) ++s.relative_error_passes;
    s.max_relative_error = std::max(s.max_relative_error, o.relative_error);
    if (o.halving_ratio >= kHalvingRatioLow && o.halving_ratio <= kHalvingRatioHigh) ++s.halving_ratio_passes;
    if (first_ratio) {
      s.min_halving_ratio = s.max_halving_ratio = o.halving_ratio;
      first_ratio = false;
    } else {
      s.min_halving_ratio = std::min(s.min_halving_ratio, o.halving_ratio);
      s.max_halving_ratio = std::max(s.max_halving_ratio, o.halving_ratio);
    }
  }
  return report;
}

}  // namespace lms3::lab
