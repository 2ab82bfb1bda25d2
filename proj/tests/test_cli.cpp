// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/bundle.hpp"
#include "lms3/cli.hpp"
#include "lms3/synthetic.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

namespace {

using lms3::testing::slurp;
using lms3::testing::TempDir;
using nlohmann::json;

struct Run {
  int code;
  std::string out, err;
};

Run lms3_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = lms3::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { make_bundle("bundle", 20, 3, 1); }

  std::string make_bundle(const std::string& name, std::size_t m, std::size_t n, std::uint64_t seed) {
    const auto b = lms3::synthetic_bundle({8, 4, m, n}, seed);
    lms3::write_bundle(b.projections, b.pool, b.tests, dir / name);
    return dir / name;
  }

  std::string bundle() const { return dir / "bundle"; }

  TempDir dir;
};

TEST_F(CliTest, ScoreWritesEveryDemonstration) {
  const auto out = dir / "s.json";
  ASSERT_EQ(lms3_run({"score", "--bundle", bundle(), "--test-id", "test-0001", "--out", out}).code, 0);
  const auto j = json::parse(slurp(out));
  EXPECT_EQ(j["test_id"], "test-0001");
  ASSERT_EQ(j["scores"].size(), 20u);
  for (const auto& s : j["scores"]) {
    EXPECT_DOUBLE_EQ(s["score"].get<double>(), s["sim"].get<double>() * s["stab"].get<double>());
  }
  const auto& m = j["manifest"];
  EXPECT_EQ(m["tool_version"], "0.1.0");
  EXPECT_EQ(m["command"], "score");
  EXPECT_EQ(m["flags"]["variant"], "product");
  EXPECT_TRUE(m["seed"].is_null());
  EXPECT_EQ(m["bundle"], bundle());
  EXPECT_FALSE(m.contains("duration_seconds"));
}

TEST_F(CliTest, SumVariantRecordsDefaultWeight) {
  const auto out = dir / "s.json";
  ASSERT_EQ(lms3_run({"score", "--bundle", bundle(), "--test-id", "test-0000", "--variant", "sum", "--out", out}).code,
            0);
  const auto j = json::parse(slurp(out));
  EXPECT_EQ(j["manifest"]["flags"]["lambda1"], 1.0);
  for (const auto& s : j["scores"])
    EXPECT_DOUBLE_EQ(s["score"].get<double>(), s["sim"].get<double>() + s["stab"].get<double>());
}

TEST_F(CliTest, RecordTimingAddsDuration) {
  const auto out = dir / "s.json";
  ASSERT_EQ(lms3_run({"--record-timing", "score", "--bundle", bundle(), "--test-id", "test-0000", "--out", out}).code,
            0);
  EXPECT_GE(json::parse(slurp(out))["manifest"]["duration_seconds"].get<double>(), 0.0);
}

TEST_F(CliTest, UnknownTestIdIsLookupFailureWithoutOutput) {
  const auto out = dir / "s.json";
  for (const char* cmd : {"score", "select", "baseline"}) {
    std::vector<std::string> args{cmd, "--bundle", bundle(), "--test-id", "nope", "--out", out};
    if (std::string(cmd) == "baseline") args.insert(args.end(), {"--method", "bm25"});
    const auto r = lms3_run(args);
    EXPECT_EQ(r.code, 4) << cmd;
    EXPECT_NE(r.err.find("nope"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(out));
  }
}

TEST_F(CliTest, SelectSingleDemonstrationAtFullThreshold) {
  const auto out = dir / "sel.json";
  ASSERT_EQ(lms3_run({"select", "--bundle", bundle(), "--test-id", "test-0002", "--out", out}).code, 0);
  const auto j = json::parse(slurp(out));
  EXPECT_EQ(j["chosen"].size(), 1u);
  EXPECT_FALSE(j["zero_shot"].get<bool>());
  EXPECT_EQ(j["pool_size"], 20);
  EXPECT_EQ(j["manifest"]["flags"]["k"], 1);
  EXPECT_EQ(j["manifest"]["flags"]["lambda"], 1.0);
  EXPECT_EQ(j["manifest"]["flags"]["polarity"], "min");
  // the chosen demo has the smallest score
  const auto s = json::parse(slurp([&] {
    const auto p = dir / "sc.json";
    lms3_run({"score", "--bundle", bundle(), "--test-id", "test-0002", "--out", p});
    return p;
  }()));
  double best = INFINITY;
  for (const auto& x : s["scores"]) best = std::min(best, x["score"].get<double>());
  EXPECT_EQ(j["chosen"][0]["score"].get<double>(), best);
}

TEST_F(CliTest, TinyThresholdOnLargePoolIsZeroShot) {
  const auto big = make_bundle("big", 100, 3, 2);
  const auto out = dir / "sel.jsonl";
  ASSERT_EQ(lms3_run({"select", "--bundle", big, "--all", "--k", "4", "--lambda", "1e-6", "--out", out}).code, 0);
  const auto ls = lines(slurp(out));
  ASSERT_EQ(ls.size(), 3u);
  for (const auto& l : ls) {
    const auto j = json::parse(l);
    EXPECT_TRUE(j["zero_shot"].get<bool>());
    EXPECT_TRUE(j["chosen"].empty());
    EXPECT_EQ(j["rejected"].size(), 4u);
  }
  const auto m = json::parse(slurp(out + ".manifest.json"));
  EXPECT_EQ(m["command"], "select");
  EXPECT_EQ(m["flags"]["all"], true);
}

TEST_F(CliTest, SelectNeedsTestIdOrAll) {
  EXPECT_EQ(lms3_run({"select", "--bundle", bundle(), "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"select", "--bundle", bundle(), "--all", "--test-id", "test-0000", "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"select", "--bundle", bundle(), "--all", "--lambda", "0", "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"select", "--bundle", bundle(), "--all", "--lambda", "1.5", "--out", dir / "x"}).code, 2);
}

TEST_F(CliTest, EmptyPoolScoresNothingAndSelectsZeroShot) {
  const auto empty = make_bundle("empty", 0, 2, 3);
  const auto out = dir / "e.json";
  ASSERT_EQ(lms3_run({"score", "--bundle", empty, "--test-id", "test-0000", "--out", out}).code, 0);
  EXPECT_TRUE(json::parse(slurp(out))["scores"].empty());
  ASSERT_EQ(lms3_run({"select", "--bundle", empty, "--test-id", "test-0000", "--out", out}).code, 0);
  EXPECT_TRUE(json::parse(slurp(out))["zero_shot"].get<bool>());
}

TEST_F(CliTest, RandomBaselineIsByteReproducible) {
  const auto a = dir / "a.jsonl", b = dir / "b.jsonl", c = dir / "c.jsonl";
  const std::vector<std::string> base{"baseline", "--method", "random", "--bundle", bundle(), "--all", "--k", "3"};
  auto with = [&](std::string seed, std::string out) {
    auto args = base;
    args.insert(args.end(), {"--seed", seed, "--out", out});
    return lms3_run(args).code;
  };
  ASSERT_EQ(with("11", a), 0);
  ASSERT_EQ(with("11", b), 0);
  ASSERT_EQ(with("12", c), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));
  const auto j = json::parse(lines(slurp(a))[0]);
  EXPECT_EQ(j["method"], "random");
  EXPECT_EQ(j["chosen"].size(), 3u);
  EXPECT_TRUE(j["chosen"][0]["score"].is_null());
  EXPECT_TRUE(j["chosen"][0]["sim"].is_null());
  EXPECT_EQ(json::parse(slurp(a + ".manifest.json"))["seed"], 11);
  // a single test agrees with its --all line
  const auto one = dir / "one.json";
  ASSERT_EQ(lms3_run({"baseline", "--method", "random", "--bundle", bundle(), "--test-id", "test-0001", "--k", "3",
                      "--seed", "11", "--out", one})
                .code,
            0);
  EXPECT_EQ(json::parse(slurp(one))["chosen"], json::parse(lines(slurp(a))[1])["chosen"]);
}

TEST_F(CliTest, Bm25BaselineRecordsParameters) {
  const auto out = dir / "bm.json";
  ASSERT_EQ(lms3_run({"baseline", "--method", "bm25", "--bundle", bundle(), "--test-id", "test-0000", "--k", "5",
                      "--k1", "1.2", "--b", "0.5", "--out", out})
                .code,
            0);
  const auto j = json::parse(slurp(out));
  EXPECT_EQ(j["manifest"]["flags"]["k1"], 1.2);
  EXPECT_EQ(j["manifest"]["flags"]["b"], 0.5);
  ASSERT_EQ(j["chosen"].size(), 5u);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_GE(j["chosen"][i - 1]["score"].get<double>(), j["chosen"][i]["score"].get<double>());
}

TEST_F(CliTest, BaselineUsageErrors) {
  EXPECT_EQ(lms3_run({"baseline", "--method", "tfidf", "--bundle", bundle(), "--test-id", "test-0000", "--k", "21",
                      "--out", dir / "x"})
                .code,
            2);
  EXPECT_EQ(lms3_run({"baseline", "--method", "oracle", "--bundle", bundle(), "--all", "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"baseline", "--method", "bm25", "--bundle", bundle(), "--all", "--b", "2", "--out", dir / "x"})
                .code,
            2);
}

TEST_F(CliTest, VerifyWritesSummaryAndIsDeterministic) {
  const auto a = dir / "v1.json", b = dir / "v2.json";
  const std::vector<std::string> args{"verify", "theorem1", "--trials", "50", "--seed", "3"};
  auto with_out = [&](const std::string& o) {
    auto v = args;
    v.insert(v.end(), {"--out", o});
    return lms3_run(v).code;
  };
  ASSERT_EQ(with_out(a), 0);
  ASSERT_EQ(with_out(b), 0);
  auto ja = json::parse(slurp(a)), jb = json::parse(slurp(b));
  ja["manifest"]["flags"].erase("out");
  jb["manifest"]["flags"].erase("out");
  EXPECT_EQ(ja.dump(), jb.dump());
  const auto j = json::parse(slurp(a));
  EXPECT_EQ(j["summary"]["trials"], 50);
  EXPECT_EQ(j["summary"]["taylor_violations"], 0);
  EXPECT_EQ(j["trials"].size(), 50u);
  EXPECT_EQ(j["manifest"]["seed"], 3);
  EXPECT_EQ(j["manifest"]["flags"]["rhs_form"], "condition");
  EXPECT_TRUE(j["manifest"]["bundle"].is_null());
}

TEST_F(CliTest, VerifyMinimalInstanceAndSummaryOnly) {
  const auto out = dir / "v.json";
  ASSERT_EQ(lms3_run({"verify", "theorem2", "--trials", "20", "--d", "1", "--dprime", "1", "--dpre", "2", "--k", "2",
                      "--summary-only", "--out", out})
                .code,
            0);
  const auto j = json::parse(slurp(out));
  EXPECT_FALSE(j.contains("trials"));
  EXPECT_EQ(j["summary"]["additivity_violations"], 0);
}

TEST_F(CliTest, VerifyUsageErrors) {
  EXPECT_EQ(lms3_run({"verify", "theorem9", "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"verify", "bounds", "--dpre", "3", "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"verify", "bounds", "--rhs-form", "other", "--out", dir / "x"}).code, 2);
  EXPECT_EQ(lms3_run({"verify", "bounds", "--trials", "0", "--out", dir / "x"}).code, 2);
}

TEST_F(CliTest, ScoreDistribution) {
  const auto five = make_bundle("five", 12, 5, 4);
  const auto out = dir / "dist.csv";
  ASSERT_EQ(lms3_run({"report", "score-dist", "--bundle", five, "--out", out}).code, 0);
  const auto rows = lines(slurp(out));
  EXPECT_EQ(rows.front(), "test_id,demo_id,score,zscore");
  EXPECT_EQ(rows.size(), 1u + 5 * 12);
  const auto summary = lines(slurp(out + ".summary.csv"));
  EXPECT_EQ(summary.front(), "test_id,m,mean,variance");
  ASSERT_EQ(summary.size(), 6u);
  for (std::size_t t = 0; t < 5; ++t) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 12; ++i) {
      const double z = std::stod(split(rows[1 + 12 * t + i])[3]);
      mean += z / 12;
      var += z * z / 11;
    }
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-12);
    EXPECT_EQ(split(summary[1 + t])[1], "12");
  }
  EXPECT_TRUE(std::filesystem::exists(out + ".manifest.json"));
}

TEST_F(CliTest, ScoreDistributionConstantScores) {
  auto b = lms3::synthetic_bundle({8, 4, 6, 2}, 5);
  b.projections.w_v.setZero();
  lms3::write_bundle(b.projections, b.pool, b.tests, dir / "flat");
  const auto out = dir / "flat.csv";
  ASSERT_EQ(lms3_run({"report", "score-dist", "--bundle", dir / "flat", "--out", out}).code, 0);
  const auto rows = lines(slurp(out));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(split(rows[i])[3], "0");
  for (const auto& l : lines(slurp(out + ".summary.csv")))
    if (l.rfind("test_id", 0) != 0) {
      EXPECT_EQ(split(l)[3], "0");
    }
}

TEST_F(CliTest, ScoreDistributionNeedsTwoDemonstrations) {
  const auto one = make_bundle("one", 1, 2, 6);
  EXPECT_EQ(lms3_run({"report", "score-dist", "--bundle", one, "--out", dir / "x.csv"}).code, 3);
}

TEST_F(CliTest, LambdaSweepIsMonotone) {
  const auto out = dir / "sweep.csv";
  ASSERT_EQ(lms3_run({"sweep", "lambda", "--bundle", bundle(), "--k", "5", "--values",
                      "0.01,0.05,0.10,0.20,0.40,0.60,0.80,1.00", "--out", out})
                .code,
            0);
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0], "lambda,mean_chosen,zero_shot_rate");
  EXPECT_EQ(split(rows[1])[0], "0.01");
  double prev_mean = -1, prev_zero = 2;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    const double mean = std::stod(f[1]), zero = std::stod(f[2]);
    EXPECT_GE(mean, prev_mean);
    EXPECT_LE(zero, prev_zero);
    prev_mean = mean;
    prev_zero = zero;
  }
  EXPECT_EQ(split(rows.back())[1], "5");
  EXPECT_EQ(split(rows.back())[2], "0");
}

TEST_F(CliTest, LambdaSweepRejectsBadValues) {
  for (const char* v : {"0", "1.5", "-0.1", "0.2,abc", ""}) {
    EXPECT_EQ(lms3_run({"sweep", "lambda", "--bundle", bundle(), "--values", v, "--out", dir / "x.csv"}).code, 2) << v;
  }
}

TEST_F(CliTest, BundleErrorsExitThree) {
  const auto out = dir / "x.json";
  EXPECT_EQ(lms3_run({"score", "--bundle", dir / "missing", "--test-id", "t", "--out", out}).code, 3);
  std::filesystem::remove(std::filesystem::path(bundle()) / "w_kq.f64");
  const auto r = lms3_run({"select", "--bundle", bundle(), "--all", "--out", out});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("w_kq.f64"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(lms3_run({}).code, 2);
  EXPECT_EQ(lms3_run({"frobnicate"}).code, 2);
  EXPECT_EQ(lms3_run({"score", "--bundle", bundle()}).code, 2);
  EXPECT_EQ(lms3_run({"score", "--bundle", bundle(), "--test-id", "test-0000", "--variant", "avg", "--out", dir / "x"})
                .code,
            2);
  EXPECT_EQ(lms3_run({"--help"}).code, 0);
}

TEST_F(CliTest, SynthRoundTripsThroughLoader) {
  const auto out = dir / "syn";
  ASSERT_EQ(lms3_run({"synth", "--out", out, "--m", "7", "--n", "2", "--seed", "9"}).code, 0);
  const auto b = lms3::load_bundle(out);
  EXPECT_EQ(b.pool.size(), 7u);
  EXPECT_EQ(b.tests.size(), 2u);
}

}  // namespace
