#include <doctest.h>

#include <cmath>
#include <random>

#include "gen.hpp"
#include "lowcon/designs.hpp"
#include "lowcon/error.hpp"
#include "lowcon/estimators.hpp"
#include "lowcon/linalg.hpp"

using namespace lowcon;
using namespace lowcon::estimators;

namespace {

template <class F>
void check_kind(F&& f, ErrorKind kind) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

// Random h with ||h||^2 <= bound2, direction uniform on the sphere.
Vector admissible_h(Rng& rng, Index r, double bound2) {
  Vector h = testgen::gaussian_vector(rng, r);
  h.normalize();
  return h * std::sqrt(bound2 * testgen::uniform(rng, 0.0, 1.0));
}

}  // namespace

TEST_CASE("fit_sls examples") {
  Vector y(3);
  y << 2.0, -1.0, 0.5;
  const auto fit = fit_sls(Matrix::Identity(3, 3), y);
  CHECK((fit.beta - y).norm() < 1e-15);
  CHECK(fit.trace_inv == doctest::Approx(3.0));
  CHECK(fit.kappa_sub == doctest::Approx(1.0));

  Rng rng(1);
  const Matrix x = testgen::gaussian(rng, 12, 4);
  Vector beta(4);
  beta << 1, 0.1, 0.1, 1;
  CHECK((fit_sls(x, x * beta).beta - beta).lpNorm<Eigen::Infinity>() < 1e-10);

  // With-replacement subsample: duplicated rows, but 3 distinct rows for p = 3.
  Matrix dup(5, 3);
  dup.row(0) = x.row(0).head(3);
  dup.row(1) = x.row(1).head(3);
  dup.row(2) = x.row(2).head(3);
  dup.row(3) = x.row(0).head(3);
  dup.row(4) = x.row(0).head(3);
  const Vector b3 = beta.head(3);
  CHECK((fit_sls(dup, dup * b3).beta - b3).norm() < 1e-10);

  Matrix one_distinct = Matrix::Ones(4, 2);
  check_kind([&] { fit_sls(one_distinct, Vector::Ones(4)); }, ErrorKind::RankDeficient);
}

TEST_CASE("mse_decompose examples") {
  Rng rng(2);
  const Matrix x = testgen::gaussian(rng, 10, 3);
  const auto zero = mse_decompose(x, Vector::Zero(10), 2.0);
  CHECK(zero.bias_sq_term == 0.0);
  CHECK(zero.total == doctest::Approx(2.0 * linalg::trace_inverse_gram(linalg::singular_values(x))));

  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix q = qr.householderQ() * Matrix::Identity(10, 3);
  const Vector h = q * testgen::gaussian_vector(rng, 3);
  const auto in_span = mse_decompose(q, h, 0.0);
  CHECK(in_span.bias_sq_term == doctest::Approx(h.squaredNorm()).epsilon(1e-12));
  CHECK(in_span.total == in_span.variance_term + in_span.bias_sq_term);
}

TEST_CASE("mse_decompose matches a Monte Carlo simulation") {
  Rng rng(3);
  const Matrix x = testgen::gaussian(rng, 8, 3);
  const Vector beta = testgen::gaussian_vector(rng, 3);
  const Vector h = testgen::gaussian_vector(rng, 8, 0.7);
  const double sigma2 = 0.8;
  const auto report = mse_decompose(x, h, sigma2);

  std::normal_distribution<double> z(0.0, std::sqrt(sigma2));
  const int draws = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    Vector y = x * beta + h;
    for (Index i = 0; i < 8; ++i) y(i) += z(rng);
    const double err = (fit_sls(x, y).beta - beta).squaredNorm();
    sum += err;
    sum_sq += err * err;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - report.total) <= 3.0 * se);
}

TEST_CASE("worst_case_mse at the identity") {
  const auto wc = worst_case_mse(Matrix::Identity(4, 4), 1.5, 0.5);
  CHECK(wc.bound == doctest::Approx(1.5 * 4 + 0.25 * 4));
  CHECK(wc.variance_term == doctest::Approx(6.0));
  CHECK(wc.bias_term == doctest::Approx(1.0));
}

TEST_CASE("h_star sign convention") {
  Rng rng(4);
  const auto wc = worst_case_mse(testgen::gaussian(rng, 9, 3), 1.0, 1.0);
  Index first = 0;
  while (wc.h_star(first) == 0.0) ++first;
  CHECK(wc.h_star(first) > 0.0);
}

TEST_CASE("worst-case bias term matches a constrained maximisation oracle") {
  // Power iteration on Q^T Q over the sphere ||h||^2 = tr(X^T X).
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = testgen::gaussian(rng, 6, 2);
    const Matrix q = (x.transpose() * x).ldlt().solve(x.transpose());
    const Matrix qtq = q.transpose() * q;
    const double radius2 = (x.transpose() * x).trace();
    Vector h = testgen::gaussian_vector(rng, 6).normalized();
    for (int it = 0; it < 5000; ++it) h = (qtq * h).normalized();
    const double oracle = radius2 * h.dot(qtq * h);
    const auto wc = worst_case_mse(x, 0.0, 1.0);
    CHECK(testgen::rel_err(wc.bias_term, oracle) < 1e-6);
  }
}

TEST_CASE("property: worst-case bound is attained and dominates") {
  Rng rng(6);
  for (int inst = 0; inst < 60; ++inst) {
    const Index p = testgen::uniform_int(rng, 1, 6);
    const Index r = testgen::uniform_int(rng, p + 1, 30);
    const Matrix x = testgen::gaussian(rng, r, p);
    const double sigma2 = testgen::uniform(rng, 0.0, 3.0);
    const double alpha = testgen::uniform(rng, 0.05, 2.0);
    const auto wc = worst_case_mse(x, sigma2, alpha);
    CHECK(wc.h_star.squaredNorm() == doctest::Approx(alpha * alpha * (x.transpose() * x).trace()));
    CHECK(testgen::rel_err(mse_decompose(x, wc.h_star, sigma2).total, wc.bound) <= 1e-8);
    const double budget = alpha * alpha * (x.transpose() * x).trace();
    for (int k = 0; k < 200; ++k)
      CHECK(mse_decompose(x, admissible_h(rng, r, budget), sigma2).total <= wc.bound + 1e-10);
  }
}

TEST_CASE("property: tr(X^T X) / lambda_min >= p with equality iff kappa = 1") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Index p = testgen::uniform_int(rng, 1, 6);
    const Index r = testgen::uniform_int(rng, p + 1, 20);
    const Matrix x = testgen::conditioned(rng, r, p, testgen::uniform(rng, 1.0, 5.0));
    const auto wc = worst_case_mse(x, 0.0, 1.0);
    CHECK(wc.bias_term >= static_cast<double>(p) * (1.0 - 1e-12));
    const double kappa = linalg::condition_number_info(x);
    if (p > 1 && kappa > 1.0 + 1e-6) CHECK(wc.bias_term > static_cast<double>(p) * (1.0 + 1e-12));
  }
  for (Index p = 1; p <= 6; ++p) {
    const Matrix ortho = testgen::conditioned(rng, 10, p, 1.0);
    CHECK(std::abs(worst_case_mse(ortho, 0.0, 1.0).bias_term - static_cast<double>(p)) <= 1e-8);
  }
}

TEST_CASE("weyl_kappa_bound examples") {
  Rng rng(8);
  const Matrix l = testgen::gaussian(rng, 10, 3);
  CHECK(testgen::rel_err(weyl_kappa_bound(l, Matrix::Zero(10, 3)), linalg::condition_number_info(l)) < 1e-12);

  const Matrix d = 0.05 * testgen::gaussian(rng, 10, 3);
  CHECK(linalg::condition_number_info(l + d) <= weyl_kappa_bound(l, d));

  Matrix unit(2, 1);
  unit << 1, 0;
  Matrix boundary(2, 1);
  boundary << 0, 1;
  check_kind([&] { weyl_kappa_bound(unit, boundary); }, ErrorKind::AssumptionViolated);
  check_kind([&] { trace_inv_bound(unit, boundary); }, ErrorKind::AssumptionViolated);
}

TEST_CASE("trace_inv_bound examples") {
  Rng rng(9);
  const Matrix l = testgen::conditioned(rng, 8, 3, 1.0);
  CHECK(trace_inv_bound(l, Matrix::Zero(8, 3)) == doctest::Approx(3.0).epsilon(1e-10));

  Matrix l1(2, 1);
  l1 << 1, 0;
  Matrix d1(2, 1);
  d1 << 0, 0.5;
  CHECK(trace_inv_bound(l1, d1) == doctest::Approx(4.0));
  CHECK(linalg::trace_inverse_gram(linalg::singular_values(l1 + d1)) == doctest::Approx(0.8));
}

TEST_CASE("property: Weyl chain dominates direct evaluation") {
  Rng rng(10);
  int checked = 0;
  while (checked < 300) {
    const Index p = testgen::uniform_int(rng, 1, 6);
    const Index r = testgen::uniform_int(rng, p + 1, 30);
    const Matrix l = testgen::gaussian(rng, r, p);
    const Matrix d = testgen::gaussian(rng, r, p, testgen::uniform(rng, 0.001, 0.5));
    if (!(linalg::singular_values(l).smallest() > linalg::singular_values(d).largest())) continue;
    ++checked;
    const Matrix xl = l + d;
    CHECK(linalg::condition_number_info(xl) <= weyl_kappa_bound(l, d));
    CHECK(linalg::trace_inverse_gram(linalg::singular_values(xl)) <= trace_inv_bound(l, d));
  }
}

TEST_CASE("theorem_bound examples") {
  const Matrix eye = Matrix::Identity(5, 5);
  CHECK(theorem_bound(eye, 0.0, 0.7) == doctest::Approx(0.49 * 5));

  Rng rng(11);
  const auto olhd = designs::generate_olhd(40, 10, rng);
  const double tr = (olhd.points.transpose() * olhd.points).trace();
  REQUIRE(olhd.kappa <= 1.13);
  CHECK(theorem_bound(olhd.points, 1.0, 0.5) <= 1.0 * 100 * 1.13 / tr + 1.13 * 0.25 * 10 + 1e-12);
  const double wc = worst_case_mse(olhd.points, 1.0, 0.5).bound;
  CHECK(wc <= theorem_bound(olhd.points, 1.0, 0.5) * (1 + 1e-8));
}

TEST_CASE("fit_huber_m examples") {
  Rng rng(12);
  const Matrix x = testgen::gaussian(rng, 50, 3);
  Vector beta(3);
  beta << 2, -1, 0.5;
  const auto clean = fit_huber_m(x, x * beta);
  CHECK((clean.beta - linalg::least_squares(x, x * beta)).norm() < 1e-8);

  Vector y = x * beta;
  std::normal_distribution<double> z(0.0, 0.3);
  for (Index i = 0; i < 50; ++i) y(i) += z(rng);
  y(7) += 200.0;
  const auto robust = fit_huber_m(x, y);
  const Vector ols = linalg::least_squares(x, y);
  CHECK(robust.converged);
  CHECK((robust.beta - beta).norm() < (ols - beta).norm());
}

TEST_CASE("fit_huber_m is near the truth under symmetric noise") {
  Rng rng(13);
  const Index n = 20000;
  const Matrix x = testgen::gaussian(rng, n, 2);
  Vector beta(2);
  beta << 1.0, -0.5;
  Vector y = x * beta;
  std::student_t_distribution<double> t(3.0);
  for (Index i = 0; i < n; ++i) y(i) += t(rng);
  const auto fit = fit_huber_m(x, y);
  // t3 has variance 3; the Huber estimate is at least as tight as OLS.
  const double se = std::sqrt(3.0 / static_cast<double>(n));
  CHECK((fit.beta - beta).lpNorm<Eigen::Infinity>() <= 3.0 * se);
}

TEST_CASE("condition_perturbation_ratio examples") {
  Rng rng(14);
  const Matrix x = testgen::gaussian(rng, 12, 3);
  const Vector y = testgen::gaussian_vector(rng, 12);
  const auto none = condition_perturbation_ratio(x, y, Vector::Zero(3));
  CHECK(none.lhs == 0.0);
  CHECK(none.rhs == 0.0);

  for (int k = 0; k < 200; ++k) {
    const auto pr = condition_perturbation_ratio(x, y, testgen::gaussian_vector(rng, 3, 0.1));
    CHECK(pr.lhs <= pr.rhs * (1 + 1e-12));
  }

  const Vector y3 = testgen::gaussian_vector(rng, 3);
  for (int k = 0; k < 20; ++k) {
    const auto pr = condition_perturbation_ratio(Matrix::Identity(3, 3), y3, testgen::gaussian_vector(rng, 3));
    CHECK(pr.lhs == doctest::Approx(pr.rhs).epsilon(1e-12));
  }
}
