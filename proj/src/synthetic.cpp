// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/synthetic.hpp"

#include "lms3/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <string>

namespace lms3::lab {
namespace {

Mat normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat m(rows, cols);
  // Column-major fill, column by column.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Vec normal_vector(Eigen::Index n, Rng& rng) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

void TrialConfig::validate() const {
  if (d < 1 || d_prime < 1) throw DimensionError("trial: d and d' must be >= 1");
  if (pretrain_size < d) throw DimensionError("trial: pretrain size must be >= d");
  if (k < 1) throw std::invalid_argument("trial: k must be >= 1");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw std::invalid_argument("trial: ridge must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw std::invalid_argument("trial: noise must be >= 0");
}

SyntheticTask random_task(const TrialConfig& cfg, Rng& rng, Mat* planted) {
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto dp = static_cast<Eigen::Index>(cfg.d_prime);
  const auto n = static_cast<Eigen::Index>(cfg.pretrain_size);
  const Mat w_star = normal_matrix(dp, d, rng);
  SyntheticTask task;
  task.d = cfg.d;
  task.d_prime = cfg.d_prime;
  task.ridge = cfg.ridge;
  task.inputs = normal_matrix(d, n, rng);
  task.targets = w_star * task.inputs + cfg.noise * normal_matrix(dp, n, rng);
  if (planted != nullptr) *planted = w_star;
  return task;
}

TheoryTrial make_theory_trial(const TrialConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto dp = static_cast<Eigen::Index>(cfg.d_prime);
  const auto n = static_cast<Eigen::Index>(cfg.pretrain_size);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d));

  TheoryTrial t;
  t.probe.w_kq = normal_matrix(d, d, rng);
  t.probe.w_v = normal_matrix(dp, d, rng);
  t.probe.h_test = normal_vector(d, rng);
  const Vec h1 = normal_vector(d, rng);
  t.near = rng.uniform() < 0.5;
  double spread = 1.0;
  if (t.near) {
    // Rank-one correction so that w_kq h_1 = h_test + spread * xi. Inverting
    // a Gaussian w_kq instead would give h_1 a heavy-tailed norm.
    spread = std::pow(10.0, -3.0 * rng.uniform());
    const Vec aim = t.probe.h_test + spread * normal_vector(d, rng);
    t.probe.w_kq += (aim - t.probe.w_kq * h1) * h1.transpose() / h1.squaredNorm();
  }
  const Mat w0 = implicit_initial_weights(t.probe.h_test, t.probe.w_kq, t.probe.w_v, cfg.d);

  // Targets whose ridge solution is exactly W_0: the noise is projected off
  // the row space of Z, and n rho W_0 (Z Z^T)^-1 Z cancels the ridge shrinkage.
  const Mat z = normal_matrix(d, n, rng);
  const Mat xi = cfg.noise * normal_matrix(dp, n, rng);
  const Eigen::LLT<Mat> gram(z * z.transpose());
  if (gram.info() != Eigen::Success) throw SingularSystemError("trial: pretraining inputs are rank-deficient");
  const Mat g_inv_z = gram.solve(z);
  t.task.d = cfg.d;
  t.task.d_prime = cfg.d_prime;
  t.task.ridge = cfg.ridge;
  t.task.inputs = z;
  t.task.targets = w0 * z + (xi - (xi * z.transpose()) * g_inv_z) +
                   static_cast<double>(n) * cfg.ridge * w0 * g_inv_z;

  t.probe.target = w0 * (t.probe.w_kq * h1) - t.probe.w_v * h1 * scale;
  t.demos.push_back(h1);

  if (cfg.k > 1) {
    const Mat m = w0 * t.probe.w_kq - t.probe.w_v * scale;
    const Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol) ++rank;
    const Mat basis = svd.matrixV().rightCols(d - rank);
    for (std::size_t i = 1; i < cfg.k; ++i) {
      Vec h = h1;
      if (basis.cols() > 0) h += spread * basis * normal_vector(basis.cols(), rng);
      t.demos.push_back(h);
    }
  }
  return t;
}

InfluenceTrial make_influence_trial(const TrialConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Mat w_star;
  InfluenceTrial t;
  t.task = random_task(cfg, rng, &w_star);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto dp = static_cast<Eigen::Index>(cfg.d_prime);
  t.upweighted.input = normal_vector(d, rng);
  t.upweighted.target = w_star * t.upweighted.input + cfg.noise * normal_vector(dp, rng);
  t.test.input = normal_vector(d, rng);
  t.test.target = w_star * t.test.input + cfg.noise * normal_vector(dp, rng);
  return t;
}

}  // namespace lms3::lab

namespace lms3 {
namespace {

constexpr const char* kWords[] = {"apples", "marbles", "coins", "books", "pencils", "tickets", "stamps", "cookies"};
constexpr const char* kNames[] = {"Ava", "Ben", "Cleo", "Dev", "Emi", "Finn", "Gus", "Hana"};

std::string make_problem(Rng& rng, int& a, int& b) {
  a = static_cast<int>(rng.below(90)) + 10;
  b = static_cast<int>(rng.below(9)) + 2;
  const char* name = kNames[rng.below(std::size(kNames))];
  const char* word = kWords[rng.below(std::size(kWords))];
  return std::string(name) + " has " + std::to_string(a) + " " + word + " and buys " + std::to_string(b) +
         " times as many. How many " + word + " does " + name + " have now?";
}

Matrix normal_rowmajor(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Vector normal_vec(std::size_t n, Rng& rng) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, i);
  return buf;
}

}  // namespace

Bundle synthetic_bundle(const SyntheticBundleConfig& cfg, std::uint64_t seed) {
  if (cfg.d < 1 || cfg.d_prime < 1) throw DimensionError("synthetic bundle: d and d' must be >= 1");
  Rng rng(seed);
  Bundle b;
  b.projections.d = cfg.d;
  b.projections.d_prime = cfg.d_prime;
  b.projections.w_kq = normal_rowmajor(cfg.d, cfg.d, rng);
  b.projections.w_v = normal_rowmajor(cfg.d_prime, cfg.d, rng);
  b.projections.source = "synthetic seed=" + std::to_string(seed);
  b.pool.d = cfg.d;
  for (std::size_t i = 0; i < cfg.m; ++i) {
    int a = 0, c = 0;
    Demonstration demo;
    demo.id = numbered("demo", i);
    demo.problem = make_problem(rng, a, c);
    demo.solution = std::to_string(a) + " + " + std::to_string(a) + " * " + std::to_string(c) + " = " +
                    std::to_string(a + a * c);
    demo.embedding = normal_vec(cfg.d, rng);
    b.pool.items.push_back(std::move(demo));
  }
  for (std::size_t i = 0; i < cfg.n; ++i) {
    int a = 0, c = 0;
    TestItem test;
    test.id = numbered("test", i);
    test.problem = make_problem(rng, a, c);
    test.embedding = normal_vec(cfg.d, rng);
    b.tests.push_back(std::move(test));
  }
  return b;
}

}  // namespace lms3
