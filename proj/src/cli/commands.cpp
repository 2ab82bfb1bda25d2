// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include "lms3/baselines.hpp"
#include "lms3/bundle.hpp"
#include "lms3/cli.hpp"
#include "lms3/errors.hpp"
#include "lms3/parallel.hpp"
#include "lms3/scoring.hpp"
#include "lms3/synthetic.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace lms3::cli {
namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Manifest and output plumbing

Json manifest(const std::string& command, Json flags, std::optional<std::uint64_t> seed,
              const std::string& bundle, const Common& c) {
  Json m;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["flags"] = std::move(flags);
  m["seed"] = seed ? Json(*seed) : Json(nullptr);
  m["bundle"] = bundle.empty() ? Json(nullptr) : Json(bundle);
  if (c.record_timing) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - c.started;
    m["duration_seconds"] = elapsed.count();
  }
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CommandError(kExitUsage, "cannot open output file " + path);
  f << text;
  f.close();
  if (!f) throw CommandError(kExitUsage, "failed writing output file " + path);
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_sidecar(const std::string& out, const Json& m) { write_json(out + ".manifest.json", m); }

// Shortest representation that reads back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Bundle open_bundle(const std::string& path) { return load_bundle(path); }

const TestItem& lookup_test(const Bundle& b, const std::string& id) {
  const TestItem* t = b.find_test(id);
  if (t == nullptr) throw CommandError(kExitLookup, "unknown test id '" + id + "'");
  return *t;
}

ScoreConfig score_config(const std::string& variant, double lambda1) {
  ScoreConfig cfg;
  cfg.variant = parse_score_variant(variant);
  cfg.lambda1 = lambda1;
  cfg.validate();
  return cfg;
}

Json scored_json(const ScoredDemonstration& s) {
  return Json{{"id", s.id},
              {"sim", s.sim},
              {"stab", s.stab},
              {"score", s.score},
              {"sim_rank_fraction", s.sim_rank_fraction}};
}

Json selection_json(const SelectionResult& r) {
  Json chosen = Json::array();
  for (const auto& s : r.chosen) chosen.push_back(scored_json(s));
  Json rejected = Json::array();
  for (const auto& x : r.rejected) rejected.push_back({{"id", x.id}, {"sim_rank_fraction", x.sim_rank_fraction}});
  return Json{{"test_id", r.test_id},
              {"zero_shot", r.zero_shot},
              {"chosen", std::move(chosen)},
              {"rejected", std::move(rejected)},
              {"pool_size", r.pool_size}};
}

std::vector<ScoredDemonstration> score_or_empty(const PoolProjection& proj, const Vector& h_test,
                                                const ScoreConfig& cfg) {
  if (proj.ids.empty()) return {};
  return score_pool(proj, h_test, cfg);
}

std::vector<const TestItem*> selected_tests(const Bundle& b, bool all, const std::string& id) {
  std::vector<const TestItem*> out;
  if (all) {
    for (const auto& t : b.tests) out.push_back(&t);
  } else {
    out.push_back(&lookup_test(b, id));
  }
  return out;
}

// Single result as one JSON document with the manifest embedded, or --all as
// JSONL with a sidecar manifest.
void emit_results(const std::string& out, bool all, const std::vector<Json>& results, const Json& m) {
  if (all) {
    std::string text;
    for (const auto& r : results) text += r.dump() + "\n";
    write_text(out, text);
    write_sidecar(out, m);
  } else {
    Json doc;
    doc["manifest"] = m;
    for (auto it = results.front().begin(); it != results.front().end(); ++it) doc[it.key()] = it.value();
    write_json(out, doc);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_score(const ScoreOptions& o, const Common& c) {
  const ScoreConfig cfg = score_config(o.variant, o.lambda1);
  const Bundle b = open_bundle(o.bundle);
  const TestItem& test = lookup_test(b, o.test_id);
  const auto scored = score_or_empty(project_pool(b.projections, b.pool), test.embedding, cfg);

  Json flags{{"bundle", o.bundle},
             {"test_id", o.test_id},
             {"variant", std::string(to_string(cfg.variant))},
             {"lambda1", cfg.lambda1},
             {"out", o.out}};
  Json doc;
  doc["manifest"] = manifest("score", std::move(flags), std::nullopt, o.bundle, c);
  doc["test_id"] = test.id;
  Json scores = Json::array();
  for (const auto& s : scored) scores.push_back(scored_json(s));
  doc["scores"] = std::move(scores);
  write_json(o.out, doc);
  return kExitOk;
}

int cmd_select(const SelectOptions& o, const Common& c) {
  SelectionConfig cfg;
  cfg.k = o.k;
  cfg.lambda = o.lambda;
  cfg.polarity = parse_polarity(o.polarity);
  cfg.score = score_config(o.variant, o.lambda1);
  cfg.validate();

  const Bundle b = open_bundle(o.bundle);
  const auto tests = selected_tests(b, o.all, o.test_id);
  const PoolProjection proj = project_pool(b.projections, b.pool);
  std::vector<Json> results(tests.size());
  parallel_for(tests.size(), [&](std::size_t i) {
    const auto scored = score_or_empty(proj, tests[i]->embedding, cfg.score);
    SelectionResult r = select_lms3(scored, cfg);
    r.test_id = tests[i]->id;
    results[i] = selection_json(r);
  });

  Json flags{{"bundle", o.bundle},
             {"test_id", o.all ? Json(nullptr) : Json(o.test_id)},
             {"all", o.all},
             {"k", cfg.k},
             {"lambda", cfg.lambda},
             {"polarity", std::string(to_string(cfg.polarity))},
             {"variant", std::string(to_string(cfg.score.variant))},
             {"lambda1", cfg.score.lambda1},
             {"out", o.out}};
  emit_results(o.out, o.all, results, manifest("select", std::move(flags), std::nullopt, o.bundle, c));
  return kExitOk;
}

int cmd_baseline(const BaselineOptions& o, const Common& c) {
  if (o.method != "random" && o.method != "tfidf" && o.method != "bm25") {
    throw CommandError(kExitUsage, "unknown baseline method '" + o.method + "'");
  }
  Bm25Params params{o.k1, o.b};
  params.validate();
  if (o.k < 1) throw CommandError(kExitUsage, "--k must be >= 1");

  const Bundle b = open_bundle(o.bundle);
  const auto tests = selected_tests(b, o.all, o.test_id);
  if (o.k > b.pool.size()) {
    throw CommandError(kExitUsage, "--k " + std::to_string(o.k) + " exceeds the pool size " +
                                       std::to_string(b.pool.size()));
  }

  std::vector<Json> results;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    RankedSelection sel;
    if (o.method == "random") {
      // One stream per test so --all and --test-id agree for the same test.
      const auto index = static_cast<std::uint64_t>(tests[t] - b.tests.data());
      sel = select_random(b.pool, o.k, Rng::derive(o.seed, index));
    } else if (o.method == "tfidf") {
      sel = select_tfidf(b.pool, tests[t]->problem, o.k);
    } else {
      sel = select_bm25(b.pool, tests[t]->problem, o.k, params);
    }
    Json chosen = Json::array();
    for (std::size_t i = 0; i < sel.indices.size(); ++i) {
      chosen.push_back({{"id", b.pool.items[sel.indices[i]].id},
                        {"sim", nullptr},
                        {"stab", nullptr},
                        {"score", sel.scores.empty() ? Json(nullptr) : Json(sel.scores[i])},
                        {"sim_rank_fraction", nullptr}});
    }
    Json r{{"test_id", tests[t]->id},
           {"zero_shot", sel.indices.empty()},
           {"chosen", std::move(chosen)},
           {"rejected", Json::array()},
           {"pool_size", b.pool.size()},
           {"method", o.method},
           {"fallback", sel.fallback}};
    results.push_back(std::move(r));
  }

  Json flags{{"method", o.method},
             {"bundle", o.bundle},
             {"test_id", o.all ? Json(nullptr) : Json(o.test_id)},
             {"all", o.all},
             {"k", o.k},
             {"seed", o.seed},
             {"k1", params.k1},
             {"b", params.b},
             {"out", o.out}};
  emit_results(o.out, o.all, results, manifest("baseline", std::move(flags), o.seed, o.bundle, c));
  return kExitOk;
}

namespace {

Json condition_json(const lab::ConditionReport& r) {
  return Json{{"k", r.k},
              {"lhs", r.lhs},
              {"rhs", r.rhs},
              {"rhs_alternate", r.rhs_alternate},
              {"rhs_form", std::string(lab::to_string(r.form))},
              {"holds", r.holds},
              {"zero_test_gradient", r.zero_test_gradient},
              {"mu", r.mu},
              {"c1", r.c1},
              {"grad_norm_test", r.grad_norm_test},
              {"predicted_delta", r.predicted_delta},
              {"oracle_delta", r.oracle_delta},
              {"meta_gradient_gap", r.meta_gradient_gap},
              {"w_hat_gap", r.w_hat_gap}};
}

Json chain_json(const lab::BoundChain& b) {
  return Json{{"l1", b.l1},           {"l11", b.l11},         {"l12", b.l12},   {"l11_bound", b.l11_bound},
              {"l12_bound", b.l12_bound}, {"slack", b.slack}, {"chain_ok", b.chain_ok}};
}

Json oracle_json(const lab::OracleComparison& o) {
  return Json{{"influence", o.influence},
              {"predicted_delta", o.predicted_delta},
              {"oracle_delta", o.oracle_delta},
              {"oracle_delta_half", o.oracle_delta_half},
              {"relative_error", o.relative_error},
              {"halving_ratio", o.halving_ratio},
              {"curvature", o.curvature},
              {"sign_eligible", o.sign_eligible},
              {"sign_agrees", o.sign_agrees}};
}

Json trial_json(const lab::VerifyConfig& cfg, const lab::TrialRecord& r) {
  Json j{{"index", r.index}, {"seed", r.seed}, {"skipped", r.skipped}};
  if (r.skipped) return j;
  if (cfg.kind != lab::VerifyKind::kInfluence) j["near"] = r.near;
  if (r.condition) j["condition"] = condition_json(*r.condition);
  if (r.chain) j["chain"] = chain_json(*r.chain);
  if (cfg.kind != lab::VerifyKind::kBounds) j["oracle"] = oracle_json(r.oracle);
  if (cfg.kind == lab::VerifyKind::kTheorem2) {
    j["singles_sum"] = r.singles_sum;
    j["additivity_gap"] = r.additivity_gap;
  }
  return j;
}

Json summary_json(const lab::VerifyReport& rep) {
  const auto& s = rep.summary;
  Json j{{"trials", s.trials},
         {"skipped", s.skipped},
         {"holds_count", s.holds_count},
         {"taylor_violations", s.taylor_violations},
         {"oracle_sign_eligible", s.oracle_sign_eligible},
         {"oracle_sign_agreements", s.oracle_sign_agreements},
         {"chain_violations", s.chain_violations},
         {"zero_test_gradients", s.zero_test_gradients}};
  if (rep.config.kind == lab::VerifyKind::kTheorem2) {
    j["additivity_violations"] = s.additivity_violations;
    j["max_additivity_gap"] = s.max_additivity_gap;
  }
  if (rep.config.kind != lab::VerifyKind::kBounds) {
    j["relative_error_passes"] = s.relative_error_passes;
    j["max_relative_error"] = s.max_relative_error;
    j["halving_ratio_passes"] = s.halving_ratio_passes;
    j["min_halving_ratio"] = s.min_halving_ratio;
    j["max_halving_ratio"] = s.max_halving_ratio;
  }
  if (rep.config.kind != lab::VerifyKind::kBounds && rep.config.kind != lab::VerifyKind::kInfluence) {
    j["max_meta_gradient_gap"] = s.max_meta_gradient_gap;
    j["max_w_hat_gap"] = s.max_w_hat_gap;
  }
  j["violated"] = rep.violated();
  return j;
}

}  // namespace

int cmd_verify(const VerifyOptions& o, const Common& c, std::ostream& err) {
  lab::VerifyConfig cfg;
  cfg.kind = lab::parse_verify_kind(o.kind);
  cfg.trials = o.trials;
  cfg.d = o.d;
  cfg.d_prime = o.d_prime;
  cfg.pretrain_size = o.d_pre;
  cfg.k = o.k;
  cfg.seed = o.seed;
  cfg.mu = o.mu;
  cfg.ridge = o.ridge;
  if (o.rhs_form == "condition") {
    cfg.form = lab::RhsForm::kCondition;
  } else if (o.rhs_form == "final_bound") {
    cfg.form = lab::RhsForm::kFinalBound;
  } else {
    throw CommandError(kExitUsage, "--rhs-form must be condition or final_bound");
  }
  cfg.validate();

  const lab::VerifyReport rep = lab::run_verification(cfg);

  Json flags{{"kind", std::string(lab::to_string(cfg.kind))},
             {"trials", cfg.trials},
             {"d", cfg.d},
             {"dprime", cfg.d_prime},
             {"dpre", cfg.pretrain_size},
             {"k", cfg.k},
             {"seed", cfg.seed},
             {"mu", cfg.mu},
             {"ridge", cfg.ridge},
             {"rhs_form", std::string(lab::to_string(cfg.form))},
             {"summary_only", o.summary_only},
             {"out", o.out}};
  Json doc;
  doc["manifest"] = manifest("verify", std::move(flags), cfg.seed, "", c);
  doc["summary"] = summary_json(rep);
  if (!o.summary_only) {
    Json trials = Json::array();
    for (const auto& r : rep.records) trials.push_back(trial_json(cfg, r));
    doc["trials"] = std::move(trials);
  }
  write_json(o.out, doc);

  if (rep.violated()) {
    err << "lms3 verify " << lab::to_string(cfg.kind) << ": invariant violated (taylor_violations="
        << rep.summary.taylor_violations << ", chain_violations=" << rep.summary.chain_violations
        << ", additivity_violations=" << rep.summary.additivity_violations << ")\n";
    return kExitInvariant;
  }
  return kExitOk;
}

int cmd_report_score_dist(const ReportOptions& o, const Common& c) {
  const ScoreConfig cfg = score_config(o.variant, o.lambda1);
  const Bundle b = open_bundle(o.bundle);
  if (b.tests.empty()) throw CommandError(kExitBundle, "bundle has no test items");
  if (b.pool.size() < 2) {
    throw CommandError(kExitBundle, "score distribution needs at least 2 demonstrations, bundle has " +
                                        std::to_string(b.pool.size()));
  }
  const PoolProjection proj = project_pool(b.projections, b.pool);

  std::ostringstream rows;
  std::ostringstream summary;
  rows << "test_id,demo_id,score,zscore\n";
  summary << "test_id,m,mean,variance\n";
  for (const auto& test : b.tests) {
    const auto scored = score_pool(proj, test.embedding, cfg);
    std::vector<double> scores;
    for (const auto& s : scored) scores.push_back(s.score);
    const auto z = zscore_normalize(scores);
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= static_cast<double>(scores.size() - 1);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      rows << test.id << ',' << scored[i].id << ',' << fmt(scores[i]) << ',' << fmt(z[i]) << '\n';
    }
    summary << test.id << ',' << scores.size() << ',' << fmt(mean) << ',' << fmt(var) << '\n';
  }

  Json flags{{"bundle", o.bundle},
             {"variant", std::string(to_string(cfg.variant))},
             {"lambda1", cfg.lambda1},
             {"out", o.out}};
  write_text(o.out, rows.str());
  write_text(o.out + ".summary.csv", summary.str());
  write_sidecar(o.out, manifest("report score-dist", std::move(flags), std::nullopt, o.bundle, c));
  return kExitOk;
}

int cmd_sweep_lambda(const SweepOptions& o, const Common& c) {
  if (o.values.empty()) throw CommandError(kExitUsage, "--values must list at least one threshold");
  for (double v : o.values) {
    if (!(v > 0.0 && v <= 1.0)) throw CommandError(kExitUsage, "--values entries must lie in (0, 1], got " + fmt(v));
  }
  SelectionConfig check;
  check.k = o.k;
  check.polarity = parse_polarity(o.polarity);
  check.validate();
  const ScoreConfig cfg = score_config(o.variant, o.lambda1);

  const Bundle b = open_bundle(o.bundle);
  if (b.tests.empty()) throw CommandError(kExitBundle, "bundle has no test items");
  const PoolProjection proj = project_pool(b.projections, b.pool);
  std::vector<std::vector<ScoredDemonstration>> per_test(b.tests.size());
  parallel_for(b.tests.size(), [&](std::size_t i) { per_test[i] = score_or_empty(proj, b.tests[i].embedding, cfg); });
  const auto rows = sweep_lambda(per_test, o.values, o.k, check.polarity);

  std::ostringstream csv;
  csv << "lambda,mean_chosen,zero_shot_rate\n";
  for (const auto& r : rows) csv << fmt(r.lambda) << ',' << fmt(r.mean_chosen) << ',' << fmt(r.zero_shot_rate) << '\n';

  Json flags{{"bundle", o.bundle},
             {"values", o.values},
             {"k", o.k},
             {"polarity", std::string(to_string(check.polarity))},
             {"variant", std::string(to_string(cfg.variant))},
             {"lambda1", cfg.lambda1},
             {"out", o.out}};
  write_text(o.out, csv.str());
  write_sidecar(o.out, manifest("sweep lambda", std::move(flags), std::nullopt, o.bundle, c));
  return kExitOk;
}

int cmd_synth(const SynthOptions& o, const Common&) {
  SyntheticBundleConfig cfg{o.d, o.d_prime, o.m, o.n};
  const Bundle b = synthetic_bundle(cfg, o.seed);
  write_bundle(b.projections, b.pool, b.tests, o.out);
  return kExitOk;
}

}  // namespace lms3::cli
