// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Numerical laboratory for the influence-function account of one- and k-shot
// in-context learning.
//
// The model is a linear map F(z) = W z with W in R^{d' x d}, trained on a
// pretraining set under the squared loss L(z, W) = 1/2 ||W z - t(z)||^2 plus a
// ridge term rho/2 ||W||_F^2. Everything has a closed form, so the exact
// retrained optimum serves as ground truth for the first-order (influence)
// prediction and for the sufficient conditions on demonstrations.
//
// Matrices in R^{d' x d} are vectorised column-major (vec(W)[i + d' j] =
// W(i, j)); the Hessian of the mean loss is then S (x) I_{d'} with
// S = Z Z^T / n + rho I.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace lms3::lab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxConditionNumber = 1e12;

struct SyntheticTask {
  std::size_t d = 0;
  std::size_t d_prime = 0;
  Mat inputs;   // d x n, one pretraining point per column
  Mat targets;  // d' x n
  double ridge = 1e-6;

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  void validate() const;
};

/// A point with its regression target, e.g. the test embedding or an
/// upweighted demonstration z_i = w_kq h_i.
struct LabeledPoint {
  Vec input;
  Vec target;
};

struct HessianSpectrum {
  double eig_min_h = 0.0;
  double eig_max_h = 0.0;
  double eig_max_hinv = 0.0;  // largest eigenvalue of H^-1 (lambda_1)
  double eig_min_hinv = 0.0;  // smallest eigenvalue of H^-1 (lambda_dd')

  double condition_number() const { return eig_max_h / eig_min_h; }
};

struct Pretrained {
  Mat w_hat;    // d' x d
  Mat hessian;  // (d d') x (d d')
  Eigen::LLT<Mat> hessian_factor;
  HessianSpectrum spectrum;
  double gradient_norm = 0.0;  // ||grad of the training objective at w_hat||_F
};

double squared_loss(const Mat& w, const LabeledPoint& p);

/// (W z - t) z^T
Mat loss_gradient(const Mat& w, const LabeledPoint& p);

/// Gradient of mean loss + ridge over the pretraining set.
Mat objective_gradient(const SyntheticTask& task, const Mat& w);

/// Explicit (d d') x (d d') Hessian of the training objective.
Mat hessian_matrix(const SyntheticTask& task);

Vec vectorize(const Mat& m);

/// Minimiser of the regularised least-squares objective and the spectrum of
/// its Hessian. Throws SingularSystemError when the normal equations are
/// singular (rho = 0 with rank-deficient inputs).
Pretrained pretrain(const SyntheticTask& task);

/// Exact minimiser of  mean pretraining loss + ridge + eps * sum_i L(z_i)
/// through the normal equations, independent of any gradient or Hessian
/// machinery. With eps = 0 the result is bit-identical to pretrain().
Mat retrain_weights(const SyntheticTask& task, std::span<const LabeledPoint> upweighted, double eps);

struct OracleResult {
  Mat w_eps;
  double test_loss = 0.0;
};

OracleResult retrain_oracle(const SyntheticTask& task, std::span<const LabeledPoint> upweighted,
                            double eps, const LabeledPoint& test);

/// -grad L(test)^T H^-1 sum_i grad L(z_i), by solving H x = sum_i grad L(z_i)
/// against the stored Cholesky factor. Throws IllConditionedError when
/// cond(H) exceeds kMaxConditionNumber.
double influence(const Pretrained& model, std::span<const LabeledPoint> upweighted,
                 const LabeledPoint& test);
double influence(const Pretrained& model, const LabeledPoint& z0, const LabeledPoint& test);

/// First-order prediction of the test loss after upweighting by
/// 1 / pretrain_size: base_loss + influence / pretrain_size.
double predict_test_loss(double base_loss, double influence_value, std::size_t pretrain_size);

// ---------------------------------------------------------------------------
// Attention in the in-context setting.

/// W_V C softmax((w_kq C)^T h_test / sqrt(d)) with C = [h_1 .. h_k, h_test].
Vec softmax_attention(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq, const Mat& w_v,
                      std::size_t d);

/// Softmax removed, evaluated term by term:
///   (W_V/sqrt d) h_test (w_kq h_test)^T h_test + sum_i (W_V/sqrt d) h_i (w_kq h_i)^T h_test
Vec linear_attention(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq, const Mat& w_v,
                     std::size_t d);

/// The same quantity in matrix form: W_V C (w_kq C)^T h_test / sqrt(d).
Vec linear_attention_matrix_form(std::span<const Vec> demos, const Vec& h_test, const Mat& w_kq,
                                 const Mat& w_v, std::size_t d);

/// Initial weights of the implicit linear model: (W_V/sqrt d) h_test (w_kq h_test)^T.
Mat implicit_initial_weights(const Vec& h_test, const Mat& w_kq, const Mat& w_v, std::size_t d);

// ---------------------------------------------------------------------------
// Sufficient conditions for a demonstration to reduce the test loss.

/// In-context side of a check. The evaluation loss at the test point and at
/// every demonstration point shares one F-space target, so grad_F L depends
/// on F alone and is 1-Lipschitz.
struct IclProbe {
  Mat w_kq;  // d x d
  Mat w_v;   // d' x d
  Vec h_test;
  Vec target;  // d'
};

/// kCondition:  ||h_test - z|| (stab + mu C1)               (derived condition; default)
/// kFinalBound: ||h_test - z|| (stab + mu C1 ||h_test||)    (extra factor; unsound when ||h_test|| < 1)
enum class RhsForm { kCondition, kFinalBound };

std::string_view to_string(RhsForm f);

struct ConditionReport {
  std::size_t k = 1;
  double lhs = 0.0;
  double rhs = 0.0;
  double rhs_alternate = 0.0;  // the other RhsForm, for comparison
  RhsForm form = RhsForm::kCondition;
  bool holds = false;
  bool zero_test_gradient = false;
  double mu = 1.0;
  double c1 = 0.0;
  double grad_norm_test = 0.0;
  double predicted_delta = 0.0;
  double oracle_delta = 0.0;
  // ||grad_F L(z_i, W_hat) - (W_V/sqrt d) h_i|| maximised over demos and
  // ||W_hat - W_0||_F; both vanish when the instance realises the
  // meta-gradient identification exactly.
  double meta_gradient_gap = 0.0;
  double w_hat_gap = 0.0;
};

ConditionReport check_theorem1(const SyntheticTask& task, const Pretrained& model, const IclProbe& probe,
                               const Vec& h, double mu, RhsForm form = RhsForm::kCondition);

ConditionReport check_theorem2(const SyntheticTask& task, const Pretrained& model, const IclProbe& probe,
                               std::span<const Vec> demos, double mu, RhsForm form = RhsForm::kCondition);

inline constexpr double kChainSlack = 1e-9;

struct BoundChain {
  double l1 = 0.0;   // g_test^T H^-1 g_z
  double l11 = 0.0;  // (g_z - g_test)^T H^-1 g_test
  double l12 = 0.0;  // g_test^T H^-1 g_test
  double l11_bound = 0.0;
  double l12_bound = 0.0;
  double slack = 0.0;
  bool chain_ok = false;
};

/// Evaluates L1 = L11 + L12 exactly and the lower bounds
///   L11 >= -lambda_1 ||g_test|| ||h_test - z|| (stab + mu C1)
///   L12 >= lambda_dd' ||g_test||^2.
/// chain_ok requires L11, L12 and L1 to clear their bounds up to a slack of
/// kChainSlack scaled by the magnitude of the terms involved.
BoundChain bound_chain(const Pretrained& model, const IclProbe& probe, const Vec& h, double mu);

}  // namespace lms3::lab
