#pragma once

#include <optional>
#include <string>

#include "lowcon/types.hpp"

namespace lowcon::estimators {

struct FitResult {
  Vector beta;
  double kappa_sub = 1.0;
  double trace_inv = 0.0;  // tr[(X*^T X*)^{-1}]
  std::string method;
};

/// Subsample least squares; kappa and trace come from the singular spectrum
/// of the (row-weighted) subsample.
FitResult fit_sls(const Matrix& x_sub, const Vector& y_sub, const std::optional<Vector>& weights = std::nullopt,
                  std::string method = {});

struct MseReport {
  double variance_term = 0.0;
  double bias_sq_term = 0.0;
  double total = 0.0;
};

/// sigma^2 tr[(X^T X)^{-1}] + ||(X^T X)^{-1} X^T h||^2.
MseReport mse_decompose(const Matrix& x_sub, const Vector& h_sub, double sigma2);

struct WorstCase {
  double alpha = 0.0;
  double bound = 0.0;
  double variance_term = 0.0;
  double bias_term = 0.0;
  Vector h_star;  // attains the bound
};

/// Worst-case MSE over misspecifications with |h(x)| <= alpha ||x||:
/// sigma^2 tr[(X^T X)^{-1}] + alpha^2 tr(X^T X) / lambda_min(X^T X).
/// h_star is sqrt(alpha^2 tr(X^T X)) times the left singular vector paired
/// with the smallest singular value, sign fixed so its first nonzero entry is
/// positive.
WorstCase worst_case_mse(const Matrix& x_sub, double sigma2, double alpha);

/// ((s_1(L) + s_1(D)) / (s_p(L) - s_1(D)))^2, an upper bound on kappa of
/// (L + D)^T (L + D). Throws AssumptionViolated unless s_p(L) > s_1(D).
double weyl_kappa_bound(const Matrix& design, const Matrix& perturbation);

/// p / (s_p(L) - s_1(D))^2, an upper bound on tr[((L + D)^T (L + D))^{-1}].
double trace_inv_bound(const Matrix& design, const Matrix& perturbation);

/// Leading terms sigma^2 p^2 kappa / tr(L^T L) + alpha^2 p kappa. The O(s_1(D))
/// remainder is not included.
double theorem_bound(const Matrix& design, double sigma2, double alpha);

struct HuberOptions {
  double tuning = 1.345;
  int max_iter = 50;
  double tol = 1e-10;
};

struct HuberResult {
  Vector beta;
  int iterations = 0;
  bool converged = false;
};

/// Huber M-estimate by IRLS with the scale re-estimated each iteration as
/// median(|residual|) / 0.6745.
HuberResult fit_huber_m(const Matrix& x, const Vector& y, const HuberOptions& options = {});

struct PerturbationRatio {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Relative change of beta when X^T y is perturbed by delta, against kappa
/// times the relative perturbation.
PerturbationRatio condition_perturbation_ratio(const Matrix& x_sub, const Vector& y_sub, const Vector& delta_xty);

}  // namespace lowcon::estimators
