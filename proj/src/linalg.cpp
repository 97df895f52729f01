#include "lowcon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lowcon/error.hpp"

namespace lowcon::linalg {
namespace {

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " has non-finite entries");
}

std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

SingularSpectrum singular_values(const Matrix& a) {
  require_finite(a, "matrix");
  if (a.size() == 0) return {Vector()};
  Eigen::JacobiSVD<Matrix> svd(a);
  return {svd.singularValues()};
}

bool is_rank_deficient(const SingularSpectrum& s, Index rows, Index cols) {
  if (s.values.size() < cols) return true;
  const double cutoff = static_cast<double>(std::max(rows, cols)) * s.largest() * kRankTolerance;
  return !(s.smallest() > cutoff) || s.largest() == 0.0;
}

Vector least_squares(const Matrix& x, const Vector& y, const std::optional<Vector>& weights) {
  const Index r = x.rows();
  const Index p = x.cols();
  if (y.size() != r) throw Error(ErrorKind::InvalidArgument, "response length does not match rows");
  if (r < p) throw Error(ErrorKind::RankDeficient, "fewer rows than columns (" + shape(r, p) + ")");
  require_finite(x, "design");
  if (!y.allFinite()) throw Error(ErrorKind::InvalidArgument, "response has non-finite entries");

  Matrix xs = x;
  Vector ys = y;
  if (weights) {
    if (weights->size() != r) throw Error(ErrorKind::InvalidArgument, "weights length does not match rows");
    if ((weights->array() <= 0.0).any() || !weights->allFinite())
      throw Error(ErrorKind::InvalidArgument, "weights must be positive and finite");
    const Vector root = weights->array().sqrt();
    xs = root.asDiagonal() * x;
    ys = root.cwiseProduct(y);
  }

  Eigen::HouseholderQR<Matrix> qr(xs);
  const Matrix rfac = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  // R has the singular values of X.
  if (is_rank_deficient(singular_values(rfac), r, p))
    throw Error(ErrorKind::RankDeficient, "numerical rank below " + std::to_string(p));
  return qr.solve(ys);
}

double condition_number_info(const Matrix& x) {
  const auto s = singular_values(x);
  if (is_rank_deficient(s, x.rows(), x.cols())) return std::numeric_limits<double>::infinity();
  const double ratio = s.largest() / s.smallest();
  return ratio * ratio;
}

Vector leverage_scores(const Matrix& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < p) throw Error(ErrorKind::RankDeficient, "fewer rows than columns (" + shape(n, p) + ")");
  require_finite(x, "design");
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix rfac = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  if (is_rank_deficient(singular_values(rfac), n, p))
    throw Error(ErrorKind::RankDeficient, "numerical rank below " + std::to_string(p));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  return q.rowwise().squaredNorm();
}

double trace_inverse_gram(const SingularSpectrum& s) {
  return s.values.array().square().inverse().sum();
}

Vector solve_gram(const Matrix& x, const Vector& b) {
  const Index p = x.cols();
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix rfac = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  if (is_rank_deficient(singular_values(rfac), x.rows(), p))
    throw Error(ErrorKind::RankDeficient, "numerical rank below " + std::to_string(p));
  // X^T X = R^T R.
  const auto upper = rfac.triangularView<Eigen::Upper>();
  Vector z = upper.transpose().solve(b);
  return upper.solve(z);
}

}  // namespace lowcon::linalg
