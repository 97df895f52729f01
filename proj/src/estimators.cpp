#include "lowcon/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lowcon/error.hpp"
#include "lowcon/linalg.hpp"

namespace lowcon::estimators {
namespace {

void require_full_rank(const linalg::SingularSpectrum& s, const Matrix& x) {
  if (x.rows() < x.cols() || linalg::is_rank_deficient(s, x.rows(), x.cols()))
    throw Error(ErrorKind::RankDeficient, "subsample matrix is numerically rank deficient");
}

struct PerturbedSpectrum {
  double s1_design;
  double sp_design;
  double s1_perturbation;
  Index p;
};

PerturbedSpectrum perturbed_spectrum(const Matrix& design, const Matrix& perturbation) {
  if (design.rows() != perturbation.rows() || design.cols() != perturbation.cols())
    throw Error(ErrorKind::InvalidArgument, "design and perturbation shapes differ");
  const auto sl = linalg::singular_values(design);
  const auto sd = linalg::singular_values(perturbation);
  PerturbedSpectrum out{sl.largest(), sl.smallest(), sd.largest(), design.cols()};
  if (!(out.sp_design > out.s1_perturbation))
    throw Error(ErrorKind::AssumptionViolated, "requires s_p(L) > s_1(D)");
  return out;
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid - 1), v.end());
  return 0.5 * (upper + v[mid - 1]);
}

}  // namespace

FitResult fit_sls(const Matrix& x_sub, const Vector& y_sub, const std::optional<Vector>& weights,
                  std::string method) {
  FitResult fit;
  fit.beta = linalg::least_squares(x_sub, y_sub, weights);
  const Matrix weighted = weights ? Matrix(weights->array().sqrt().matrix().asDiagonal() * x_sub) : x_sub;
  const auto s = linalg::singular_values(weighted);
  const double ratio = s.largest() / s.smallest();
  fit.kappa_sub = ratio * ratio;
  fit.trace_inv = linalg::trace_inverse_gram(s);
  fit.method = std::move(method);
  return fit;
}

MseReport mse_decompose(const Matrix& x_sub, const Vector& h_sub, double sigma2) {
  if (!(sigma2 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma2 must be nonnegative");
  const auto s = linalg::singular_values(x_sub);
  require_full_rank(s, x_sub);
  MseReport m;
  m.variance_term = sigma2 * linalg::trace_inverse_gram(s);
  // Q h is the least-squares coefficient of h on X.
  m.bias_sq_term = linalg::least_squares(x_sub, h_sub).squaredNorm();
  m.total = m.variance_term + m.bias_sq_term;
  return m;
}

WorstCase worst_case_mse(const Matrix& x_sub, double sigma2, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  if (!(sigma2 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma2 must be nonnegative");
  if (!x_sub.allFinite()) throw Error(ErrorKind::InvalidArgument, "subsample has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(x_sub, Eigen::ComputeThinU);
  const linalg::SingularSpectrum s{svd.singularValues()};
  require_full_rank(s, x_sub);

  const Index p = x_sub.cols();
  const double trace = s.values.squaredNorm();  // tr(X^T X)
  const double lambda_min = s.smallest() * s.smallest();

  WorstCase w;
  w.alpha = alpha;
  w.variance_term = sigma2 * linalg::trace_inverse_gram(s);
  w.bias_term = alpha * alpha * trace / lambda_min;
  w.bound = w.variance_term + w.bias_term;

  Vector direction = svd.matrixU().col(p - 1);
  for (Index i = 0; i < direction.size(); ++i) {
    if (direction(i) == 0.0) continue;
    if (direction(i) < 0.0) direction = -direction;
    break;
  }
  w.h_star = std::sqrt(alpha * alpha * trace) * direction;
  return w;
}

double weyl_kappa_bound(const Matrix& design, const Matrix& perturbation) {
  const PerturbedSpectrum s = perturbed_spectrum(design, perturbation);
  const double ratio = (s.s1_design + s.s1_perturbation) / (s.sp_design - s.s1_perturbation);
  return ratio * ratio;
}

double trace_inv_bound(const Matrix& design, const Matrix& perturbation) {
  const PerturbedSpectrum s = perturbed_spectrum(design, perturbation);
  const double gap = s.sp_design - s.s1_perturbation;
  return static_cast<double>(s.p) / (gap * gap);
}

double theorem_bound(const Matrix& design, double sigma2, double alpha) {
  const auto s = linalg::singular_values(design);
  require_full_rank(s, design);
  const auto p = static_cast<double>(design.cols());
  const double ratio = s.largest() / s.smallest();
  const double kappa = ratio * ratio;
  const double trace = s.values.squaredNorm();
  return sigma2 * p * p * kappa / trace + alpha * alpha * p * kappa;
}

HuberResult fit_huber_m(const Matrix& x, const Vector& y, const HuberOptions& options) {
  if (!(options.tuning > 0.0)) throw Error(ErrorKind::InvalidArgument, "tuning constant must be positive");
  HuberResult out;
  out.beta = linalg::least_squares(x, y);
  const Index n = x.rows();
  std::vector<double> abs_resid(static_cast<std::size_t>(n));

  for (int it = 1; it <= options.max_iter; ++it) {
    out.iterations = it;
    const Vector resid = y - x * out.beta;
    for (Index i = 0; i < n; ++i) abs_resid[static_cast<std::size_t>(i)] = std::abs(resid(i));
    const double scale = median_of(abs_resid) / 0.6745;
    if (!(scale > 0.0)) {
      // At least half the residuals vanish; unit weights reproduce the fit.
      out.converged = true;
      return out;
    }
    Vector w(n);
    const double cutoff = options.tuning * scale;
    for (Index i = 0; i < n; ++i) {
      const double a = std::abs(resid(i));
      w(i) = a <= cutoff ? 1.0 : cutoff / a;
    }
    const Vector next = linalg::least_squares(x, y, w);
    const double change = (next - out.beta).lpNorm<Eigen::Infinity>() /
                          std::max(out.beta.lpNorm<Eigen::Infinity>(), 1e-300);
    out.beta = next;
    if (change < options.tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

PerturbationRatio condition_perturbation_ratio(const Matrix& x_sub, const Vector& y_sub, const Vector& delta_xty) {
  if (delta_xty.size() != x_sub.cols()) throw Error(ErrorKind::InvalidArgument, "perturbation length must be p");
  const Vector xty = x_sub.transpose() * y_sub;
  if (xty.squaredNorm() == 0.0) throw Error(ErrorKind::InvalidArgument, "X^T y is zero");
  const Vector beta = linalg::solve_gram(x_sub, xty);
  const Vector dbeta = linalg::solve_gram(x_sub, delta_xty);
  const double kappa = linalg::condition_number_info(x_sub);
  return {dbeta.norm() / beta.norm(), kappa * delta_xty.norm() / xty.norm()};
}

}  // namespace lowcon::estimators
