// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lms3/selection.hpp"
#include "lms3/theory_lab.hpp"
#include "lms3/verify.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace lms3::cli {

// Carries an exit code up to run().
class CommandError : public std::runtime_error {
 public:
  CommandError(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct Common {
  bool record_timing = false;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
};

struct ScoreOptions {
  std::string bundle;
  std::string test_id;
  std::string variant = "product";
  double lambda1 = 1.0;
  std::string out;
};

struct SelectOptions {
  std::string bundle;
  std::string test_id;
  bool all = false;
  std::size_t k = 1;
  double lambda = 1.0;
  std::string polarity = "min";
  std::string variant = "product";
  double lambda1 = 1.0;
  std::string out;
};

struct BaselineOptions {
  std::string method;
  std::string bundle;
  std::string test_id;
  bool all = false;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  double k1 = 1.5;
  double b = 0.75;
  std::string out;
};

struct VerifyOptions {
  std::string kind;
  std::size_t trials = 1000;
  std::size_t d = 8;
  std::size_t d_prime = 4;
  std::size_t d_pre = 256;
  std::size_t k = 3;
  std::uint64_t seed = 0;
  double mu = 1.0;
  double ridge = 1e-6;
  std::string rhs_form = "condition";
  bool summary_only = false;
  std::string out;
};

struct ReportOptions {
  std::string bundle;
  std::string variant = "product";
  double lambda1 = 1.0;
  std::string out;
};

struct SweepOptions {
  std::string bundle;
  std::vector<double> values;
  std::size_t k = 1;
  std::string polarity = "min";
  std::string variant = "product";
  double lambda1 = 1.0;
  std::string out;
};

struct SynthOptions {
  std::string out;
  std::size_t d = 8;
  std::size_t d_prime = 4;
  std::size_t m = 20;
  std::size_t n = 3;
  std::uint64_t seed = 0;
};

int cmd_score(const ScoreOptions& o, const Common& c);
int cmd_select(const SelectOptions& o, const Common& c);
int cmd_baseline(const BaselineOptions& o, const Common& c);
int cmd_verify(const VerifyOptions& o, const Common& c, std::ostream& err);
int cmd_report_score_dist(const ReportOptions& o, const Common& c);
int cmd_sweep_lambda(const SweepOptions& o, const Common& c);
int cmd_synth(const SynthOptions& o, const Common& c);

}  // namespace lms3::cli
