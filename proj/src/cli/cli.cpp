// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/cli.hpp"

#include "commands.hpp"
#include "lms3/bundle.hpp"
#include "lms3/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

namespace lms3::cli {
namespace {

void add_bundle(CLI::App* sub, std::string& path) {
  sub->add_option("--bundle", path, "Bundle directory")->required();
}

void add_variant(CLI::App* sub, std::string& variant, double& lambda1) {
  sub->add_option("--variant", variant, "Score combination")
      ->check(CLI::IsMember({"product", "sum"}))
      ->capture_default_str();
  sub->add_option("--lambda1", lambda1, "Stab weight for the sum variant")->capture_default_str();
}

void add_target(CLI::App* sub, std::string& test_id, bool& all) {
  auto* id = sub->add_option("--test-id", test_id, "Test item id");
  auto* every = sub->add_flag("--all", all, "Every test item, one JSONL line each");
  id->excludes(every);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LMS3 demonstration selection toolkit and theory lab", "lms3"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Common common;
  app.add_flag("--record-timing", common.record_timing, "Record wall-clock duration in the run manifest");

  ScoreOptions score;
  auto* s_score = app.add_subcommand("score", "Score every demonstration against one test item");
  add_bundle(s_score, score.bundle);
  s_score->add_option("--test-id", score.test_id, "Test item id")->required();
  add_variant(s_score, score.variant, score.lambda1);
  s_score->add_option("--out", score.out, "Output JSON")->required();

  SelectOptions select;
  auto* s_select = app.add_subcommand("select", "Top-k selection with relative-rank rejection");
  add_bundle(s_select, select.bundle);
  add_target(s_select, select.test_id, select.all);
  s_select->add_option("--k", select.k, "Demonstrations per prompt")->capture_default_str();
  s_select->add_option("--lambda", select.lambda, "Rejection threshold in (0, 1]")->capture_default_str();
  s_select->add_option("--polarity", select.polarity, "Which score end is best")
      ->check(CLI::IsMember({"min", "max"}))
      ->capture_default_str();
  add_variant(s_select, select.variant, select.lambda1);
  s_select->add_option("--out", select.out, "Output JSON (JSONL with --all)")->required();

  BaselineOptions baseline;
  auto* s_base = app.add_subcommand("baseline", "Random, TF-IDF or BM25 selection");
  s_base->add_option("--method", baseline.method, "random | tfidf | bm25")
      ->required()
      ->check(CLI::IsMember({"random", "tfidf", "bm25"}));
  add_bundle(s_base, baseline.bundle);
  add_target(s_base, baseline.test_id, baseline.all);
  s_base->add_option("--k", baseline.k, "Demonstrations per prompt")->capture_default_str();
  s_base->add_option("--seed", baseline.seed, "Seed for the random baseline")->capture_default_str();
  s_base->add_option("--k1", baseline.k1, "BM25 k1")->capture_default_str();
  s_base->add_option("--b", baseline.b, "BM25 b")->capture_default_str();
  s_base->add_option("--out", baseline.out, "Output JSON (JSONL with --all)")->required();

  VerifyOptions verify;
  auto* s_verify = app.add_subcommand("verify", "Monte-Carlo checks of the theory lab");
  s_verify->add_option("kind", verify.kind, "theorem1 | theorem2 | bounds | influence")
      ->required()
      ->check(CLI::IsMember({"theorem1", "theorem2", "bounds", "influence"}));
  s_verify->add_option("--trials", verify.trials)->capture_default_str();
  s_verify->add_option("--d", verify.d)->capture_default_str();
  s_verify->add_option("--dprime", verify.d_prime)->capture_default_str();
  s_verify->add_option("--dpre", verify.d_pre, "Pretraining set size")->capture_default_str();
  s_verify->add_option("--k", verify.k, "Demonstrations per theorem2 trial")->capture_default_str();
  s_verify->add_option("--seed", verify.seed)->capture_default_str();
  s_verify->add_option("--mu", verify.mu, "Lipschitz constant of grad_F L")->capture_default_str();
  s_verify->add_option("--ridge", verify.ridge)->capture_default_str();
  s_verify->add_option("--rhs-form", verify.rhs_form, "condition | final_bound")
      ->check(CLI::IsMember({"condition", "final_bound"}))
      ->capture_default_str();
  s_verify->add_flag("--summary-only", verify.summary_only, "Omit per-trial records");
  s_verify->add_option("--out", verify.out, "Output JSON")->required();

  ReportOptions report;
  auto* s_report = app.add_subcommand("report", "Emit analysis tables");
  s_report->require_subcommand(1);
  auto* s_dist = s_report->add_subcommand("score-dist", "z-scored score distribution per test");
  add_bundle(s_dist, report.bundle);
  add_variant(s_dist, report.variant, report.lambda1);
  s_dist->add_option("--out", report.out, "Output CSV")->required();

  SweepOptions sweep;
  auto* s_sweep = app.add_subcommand("sweep", "Parameter sweeps");
  s_sweep->require_subcommand(1);
  auto* s_lambda = s_sweep->add_subcommand("lambda", "Selection statistics over rejection thresholds");
  add_bundle(s_lambda, sweep.bundle);
  s_lambda->add_option("--values", sweep.values, "Comma-separated thresholds in (0, 1]")
      ->required()
      ->delimiter(',');
  s_lambda->add_option("--k", sweep.k)->capture_default_str();
  s_lambda->add_option("--polarity", sweep.polarity)
      ->check(CLI::IsMember({"min", "max"}))
      ->capture_default_str();
  add_variant(s_lambda, sweep.variant, sweep.lambda1);
  s_lambda->add_option("--out", sweep.out, "Output CSV")->required();

  SynthOptions synth;
  auto* s_synth = app.add_subcommand("synth", "Write a random synthetic bundle");
  s_synth->add_option("--out", synth.out, "Bundle directory")->required();
  s_synth->add_option("--d", synth.d)->capture_default_str();
  s_synth->add_option("--dprime", synth.d_prime)->capture_default_str();
  s_synth->add_option("--m", synth.m, "Demonstrations")->capture_default_str();
  s_synth->add_option("--n", synth.n, "Test items")->capture_default_str();
  s_synth->add_option("--seed", synth.seed)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s_score->parsed()) return cmd_score(score, common);
    if (s_select->parsed()) {
      if (!select.all && select.test_id.empty()) throw CommandError(kExitUsage, "select needs --test-id or --all");
      return cmd_select(select, common);
    }
    if (s_base->parsed()) {
      if (!baseline.all && baseline.test_id.empty()) {
        throw CommandError(kExitUsage, "baseline needs --test-id or --all");
      }
      return cmd_baseline(baseline, common);
    }
    if (s_verify->parsed()) return cmd_verify(verify, common, err);
    if (s_dist->parsed()) return cmd_report_score_dist(report, common);
    if (s_lambda->parsed()) return cmd_sweep_lambda(sweep, common);
    if (s_synth->parsed()) return cmd_synth(synth, common);
  } catch (const CommandError& e) {
    err << "lms3: " << e.what() << "\n";
    return e.code();
  } catch (const BundleError& e) {
    err << "lms3: bundle error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitBundle;
  } catch (const std::invalid_argument& e) {
    err << "lms3: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace lms3::cli
