// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lms3/theory_lab.hpp"

#include "lms3/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace lms3::lab {
namespace {

constexpr double kMinReciprocalCondition = 1e-13;

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

double inv_sqrt(std::size_t d) { return 1.0 / std::sqrt(static_cast<double>(d)); }

void check_attention_dims(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq, const Mat& w_v,
                          std::size_t d) {
  const auto dd = static_cast<Eigen::Index>(d);
  require(d >= 1 && h_test.size() == dd && w_kq.rows() == dd && w_kq.cols() == dd && w_v.cols() == dd,
          "attention: expected h_test of length d, w_kq d x d and w_v d' x d");
  for (const auto& h : demos) require(h.size() == dd, "attention: demonstration embedding length differs from d");
}

Mat columns(std::span<const Vec> demos, const Vec& h_test) {
  Mat c(h_test.size(), static_cast<Eigen::Index>(demos.size()) + 1);
  for (std::size_t i = 0; i < demos.size(); ++i) c.col(static_cast<Eigen::Index>(i)) = demos[i];
  c.col(c.cols() - 1) = h_test;
  return c;
}

void check_probe(const Pretrained& model, const IclProbe& probe) {
  const auto d = model.w_hat.cols();
  const auto dp = model.w_hat.rows();
  require(probe.w_kq.rows() == d && probe.w_kq.cols() == d, "probe: w_kq must be d x d");
  require(probe.w_v.rows() == dp && probe.w_v.cols() == d, "probe: w_v must be d' x d");
  require(probe.h_test.size() == d, "probe: h_test must have length d");
  require(probe.target.size() == dp, "probe: target must have length d'");
}

void check_conditioning(const Pretrained& model) {
  const double cond = model.spectrum.condition_number();
  if (!(cond <= kMaxConditionNumber)) {
    throw IllConditionedError("Hessian condition number " + std::to_string(cond) + " exceeds 1e12");
  }
}

}  // namespace

void SyntheticTask::validate() const {
  require(d >= 1 && d_prime >= 1, "task: d and d' must be >= 1");
  require(inputs.rows() == static_cast<Eigen::Index>(d), "task: inputs must have d rows");
  require(targets.rows() == static_cast<Eigen::Index>(d_prime), "task: targets must have d' rows");
  require(targets.cols() == inputs.cols(), "task: one target per pretraining input");
  require(size() >= d, "task: need at least d pretraining points");
  require(std::isfinite(ridge) && ridge >= 0.0, "task: ridge must be finite and >= 0");
  require(inputs.allFinite() && targets.allFinite(), "task: non-finite pretraining data");
}

double squared_loss(const Mat& w, const LabeledPoint& p) {
  return 0.5 * (w * p.input - p.target).squaredNorm();
}

Mat loss_gradient(const Mat& w, const LabeledPoint& p) {
  require(w.cols() == p.input.size() && w.rows() == p.target.size(), "loss_gradient: shape mismatch");
  return (w * p.input - p.target) * p.input.transpose();
}

Mat objective_gradient(const SyntheticTask& task, const Mat& w) {
  const auto n = static_cast<double>(task.size());
  return (w * task.inputs - task.targets) * task.inputs.transpose() / n + task.ridge * w;
}

Mat hessian_matrix(const SyntheticTask& task) {
  task.validate();
  const auto d = static_cast<Eigen::Index>(task.d);
  const auto dp = static_cast<Eigen::Index>(task.d_prime);
  const Mat s = task.inputs * task.inputs.transpose() / static_cast<double>(task.size()) +
                task.ridge * Mat::Identity(d, d);
  Mat h = Mat::Zero(d * dp, d * dp);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index l = 0; l < d; ++l) {
      for (Eigen::Index i = 0; i < dp; ++i) h(i + dp * j, i + dp * l) = s(j, l);
    }
  }
  return h;
}

Vec vectorize(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat retrain_weights(const SyntheticTask& task, std::span<const LabeledPoint> upweighted, double eps) {
  task.validate();
  require(std::isfinite(eps) && eps >= 0.0, "retrain: eps must be finite and >= 0");
  const auto d = static_cast<Eigen::Index>(task.d);
  const auto n = static_cast<double>(task.size());
  Mat s = task.inputs * task.inputs.transpose() / n + task.ridge * Mat::Identity(d, d);
  Mat b = task.targets * task.inputs.transpose() / n;
  for (const auto& p : upweighted) {
    require(p.input.size() == d && p.target.size() == static_cast<Eigen::Index>(task.d_prime),
            "retrain: upweighted point has wrong shape");
    s += eps * (p.input * p.input.transpose());
    b += eps * (p.target * p.input.transpose());
  }
  const Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success || llt.rcond() < kMinReciprocalCondition) {
    throw SingularSystemError("normal equations are singular (rank-deficient inputs with ridge 0?)");
  }
  // W S = B with S symmetric  =>  W^T = S^-1 B^T
  return llt.solve(b.transpose()).transpose();
}

Pretrained pretrain(const SyntheticTask& task) {
  Pretrained out;
  out.w_hat = retrain_weights(task, {}, 0.0);
  out.hessian = hessian_matrix(task);
  out.hessian_factor.compute(out.hessian);
  if (out.hessian_factor.info() != Eigen::Success) {
    throw SingularSystemError("Hessian is not positive definite");
  }

  const Eigen::SelfAdjointEigenSolver<Mat> eig_h(out.hessian, Eigen::EigenvaluesOnly);
  const Mat h_inv = out.hessian_factor.solve(Mat::Identity(out.hessian.rows(), out.hessian.cols()));
  const Eigen::SelfAdjointEigenSolver<Mat> eig_inv(0.5 * (h_inv + h_inv.transpose()), Eigen::EigenvaluesOnly);
  out.spectrum.eig_min_h = eig_h.eigenvalues().minCoeff();
  out.spectrum.eig_max_h = eig_h.eigenvalues().maxCoeff();
  out.spectrum.eig_min_hinv = eig_inv.eigenvalues().minCoeff();
  out.spectrum.eig_max_hinv = eig_inv.eigenvalues().maxCoeff();
  if (!(out.spectrum.eig_min_h > 0.0)) throw SingularSystemError("Hessian is not positive definite");

  out.gradient_norm = objective_gradient(task, out.w_hat).norm();
  return out;
}

OracleResult retrain_oracle(const SyntheticTask& task, std::span<const LabeledPoint> upweighted, double eps,
                            const LabeledPoint& test) {
  OracleResult r;
  r.w_eps = retrain_weights(task, upweighted, eps);
  r.test_loss = squared_loss(r.w_eps, test);
  return r;
}

double influence(const Pretrained& model, std::span<const LabeledPoint> upweighted, const LabeledPoint& test) {
  check_conditioning(model);
  const Vec g_test = vectorize(loss_gradient(model.w_hat, test));
  Vec g_sum = Vec::Zero(g_test.size());
  for (const auto& p : upweighted) g_sum += vectorize(loss_gradient(model.w_hat, p));
  const Vec x = model.hessian_factor.solve(g_sum);
  return -g_test.dot(x);
}

double influence(const Pretrained& model, const LabeledPoint& z0, const LabeledPoint& test) {
  return influence(model, std::span<const LabeledPoint>(&z0, 1), test);
}

double predict_test_loss(double base_loss, double influence_value, std::size_t pretrain_size) {
  if (pretrain_size < 1) throw std::invalid_argument("predict_test_loss: pretrain_size must be >= 1");
  return base_loss + influence_value / static_cast<double>(pretrain_size);
}

Vec softmax_attention(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq, const Mat& w_v,
                      std::size_t d) {
  check_attention_dims(demos, h_test, w_kq, w_v, d);
  const Mat c = columns(demos, h_test);
  Vec logits = (w_kq * c).transpose() * h_test * inv_sqrt(d);
  logits.array() -= logits.maxCoeff();
  Vec weights = logits.array().exp();
  weights /= weights.sum();
  return w_v * (c * weights);
}

Vec linear_attention(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq, const Mat& w_v,
                     std::size_t d) {
  check_attention_dims(demos, h_test, w_kq, w_v, d);
  const double scale = inv_sqrt(d);
  auto term = [&](const Vec& h) -> Vec { return (w_v * h * scale) * (w_kq * h).dot(h_test); };
  Vec out = term(h_test);
  for (const auto& h : demos) out += term(h);
  return out;
}

Vec linear_attention_matrix_form(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq,
                                 const Mat& w_v, std::size_t d) {
  check_attention_dims(demos, h_test, w_kq, w_v, d);
  const Mat c = columns(demos, h_test);
  return w_v * c * ((w_kq * c).transpose() * h_test) * inv_sqrt(d);
}

Mat implicit_initial_weights(const Vec& h_test, const Mat& w_kq, const Mat& w_v, std::size_t d) {
  return (w_v * h_test * inv_sqrt(d)) * (w_kq * h_test).transpose();
}

std::string_view to_string(RhsForm f) { return f == RhsForm::kCondition ? "condition" : "final_bound"; }

ConditionReport check_theorem2(const SyntheticTask& task, const Pretrained& model, const IclProbe& probe,
                               std::span<const Vec> demos, double mu, RhsForm form) {
  check_probe(model, probe);
  require(!demos.empty(), "check_theorem: need at least one demonstration");
  require(std::isfinite(mu) && mu >= 0.0, "check_theorem: mu must be finite and >= 0");
  const std::size_t d = task.d;
  const double scale = inv_sqrt(d);
  const LabeledPoint test{probe.h_test, probe.target};

  ConditionReport r;
  r.k = demos.size();
  r.form = form;
  r.mu = mu;
  r.grad_norm_test = loss_gradient(model.w_hat, test).norm();
  r.zero_test_gradient = r.grad_norm_test == 0.0;
  r.c1 = (probe.w_v * probe.h_test).norm() * scale * (probe.w_kq * probe.h_test).norm() * probe.h_test.norm();

  const double ratio = model.spectrum.eig_min_hinv / model.spectrum.eig_max_hinv;
  r.lhs = static_cast<double>(r.k) * ratio * r.grad_norm_test;

  std::vector<LabeledPoint> upweighted;
  upweighted.reserve(demos.size());
  double rhs_condition = 0.0;
  double rhs_final = 0.0;
  for (const auto& h : demos) {
    require(h.size() == static_cast<Eigen::Index>(d), "check_theorem: demonstration length differs from d");
    const Vec z = probe.w_kq * h;
    const Vec meta_gradient = probe.w_v * h * scale;
    const double stab = meta_gradient.norm();
    const double dist = (probe.h_test - z).norm();
    rhs_condition += dist * (stab + mu * r.c1);
    rhs_final += dist * (stab + mu * r.c1 * probe.h_test.norm());
    r.meta_gradient_gap =
        std::max(r.meta_gradient_gap, ((model.w_hat * z - probe.target) - meta_gradient).norm());
    upweighted.push_back({z, probe.target});
  }
  r.rhs = form == RhsForm::kCondition ? rhs_condition : rhs_final;
  r.rhs_alternate = form == RhsForm::kCondition ? rhs_final : rhs_condition;
  r.holds = r.lhs > r.rhs;

  const auto n = task.size();
  r.predicted_delta = influence(model, upweighted, test) / static_cast<double>(n);
  const double base = squared_loss(model.w_hat, test);
  r.oracle_delta = retrain_oracle(task, upweighted, 1.0 / static_cast<double>(n), test).test_loss - base;
  r.w_hat_gap = (model.w_hat - implicit_initial_weights(probe.h_test, probe.w_kq, probe.w_v, d)).norm();
  return r;
}

ConditionReport check_theorem1(const SyntheticTask& task, const Pretrained& model, const IclProbe& probe,
                               const Vec& h, double mu, RhsForm form) {
  return check_theorem2(task, model, probe, std::span<const Vec>(&h, 1), mu, form);
}

BoundChain bound_chain(const Pretrained& model, const IclProbe& probe, const Vec& h, double mu) {
  check_probe(model, probe);
  require(h.size() == probe.h_test.size(), "bound_chain: demonstration length differs from d");
  const auto d = static_cast<std::size_t>(probe.h_test.size());
  const double scale = inv_sqrt(d);

  const Vec z = probe.w_kq * h;
  const Vec g_test = vectorize(loss_gradient(model.w_hat, {probe.h_test, probe.target}));
  const Vec g_z = vectorize(loss_gradient(model.w_hat, {z, probe.target}));
  const Vec x = model.hessian_factor.solve(g_test);

  BoundChain b;
  b.l12 = g_test.dot(x);
  b.l11 = (g_z - g_test).dot(x);
  b.l1 = g_z.dot(x);

  const double g_norm = g_test.norm();
  const double stab = (probe.w_v * h).norm() * scale;
  const double c1 = (probe.w_v * probe.h_test).norm() * scale * (probe.w_kq * probe.h_test).norm() *
                    probe.h_test.norm();
  const double dist = (probe.h_test - z).norm();
  b.l11_bound = -model.spectrum.eig_max_hinv * g_norm * dist * (stab + mu * c1);
  b.l12_bound = model.spectrum.eig_min_hinv * g_norm * g_norm;

  const double magnitude = std::max({1.0, std::abs(b.l1), std::abs(b.l11), std::abs(b.l12),
                                     std::abs(b.l11_bound), std::abs(b.l12_bound)});
  b.slack = kChainSlack * magnitude;
  b.chain_ok = b.l11 >= b.l11_bound - b.slack && b.l12 >= b.l12_bound - b.slack &&
               b.l1 >= b.l11_bound + b.l12_bound - b.slack;
  return b;
}

}  // namespace lms3::lab
