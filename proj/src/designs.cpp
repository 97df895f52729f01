#include "lowcon/designs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "lowcon/error.hpp"
#include "lowcon/linalg.hpp"

namespace lowcon::designs {

Box Box::cube(Index p, double half_width) {
  return {Vector::Constant(p, -half_width), Vector::Constant(p, half_width)};
}

bool Box::contains(const Eigen::Ref<const Vector>& x, double slack) const {
  for (Index j = 0; j < dims(); ++j)
    if (x(j) < lower(j) - slack || x(j) > upper(j) + slack) return false;
  return true;
}

void Box::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw Error(ErrorKind::InvalidArgument, "box bounds must be non-empty and of equal length");
  if (!lower.allFinite() || !upper.allFinite()) throw Error(ErrorKind::InvalidArgument, "box bounds must be finite");
  for (Index j = 0; j < dims(); ++j)
    if (!(lower(j) < upper(j)))
      throw Error(ErrorKind::DegenerateBox, "empty interval in dimension " + std::to_string(j));
}

Vector lhd_levels(Index r) {
  if (r < 1) throw Error(ErrorKind::InvalidArgument, "r must be positive");
  Vector levels(r);
  for (Index k = 1; k <= r; ++k) levels(k - 1) = static_cast<double>(2 * k - 1 - r) / static_cast<double>(r);
  return levels;
}

double design_kappa(const Matrix& points) { return linalg::condition_number_info(points); }

double max_abs_column_correlation(const Matrix& points) {
  const Index p = points.cols();
  if (p < 2) return 0.0;
  const Matrix centered = points.rowwise() - points.colwise().mean();
  const Vector norms = centered.colwise().norm();
  double worst = 0.0;
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k) {
      if (norms(j) == 0.0 || norms(k) == 0.0) continue;
      worst = std::max(worst, std::abs(centered.col(j).dot(centered.col(k))) / (norms(j) * norms(k)));
    }
  return worst;
}

DesignMatrix generate_lhd(Index r, Index p, Rng& rng) {
  if (r < 2 || p < 1) throw Error(ErrorKind::InvalidArgument, "LHD needs r >= 2 and p >= 1");
  const Vector levels = lhd_levels(r);
  DesignMatrix d;
  d.points.resize(r, p);
  for (Index j = 0; j < p; ++j) {
    std::vector<double> column(levels.data(), levels.data() + r);
    std::shuffle(column.begin(), column.end(), rng);
    for (Index i = 0; i < r; ++i) d.points(i, j) = column[static_cast<std::size_t>(i)];
  }
  d.box = Box::cube(p);
  d.kappa = design_kappa(d.points);
  d.max_abs_corr = max_abs_column_correlation(d.points);
  return d;
}

namespace {

// Integer form of an LHD: entry (i, j) holds the numerator 2k - 1 - r of its
// level, so inner products are exact.
class SwapSearch {
 public:
  SwapSearch(Index r, Index p) : r_(r), p_(p), a_(r * p), gram_(p * p) {}

  void randomize(Rng& rng) {
    std::vector<std::int64_t> column(static_cast<std::size_t>(r_));
    for (Index k = 1; k <= r_; ++k) column[static_cast<std::size_t>(k - 1)] = 2 * k - 1 - r_;
    for (Index j = 0; j < p_; ++j) {
      std::shuffle(column.begin(), column.end(), rng);
      for (Index i = 0; i < r_; ++i) at(i, j) = column[static_cast<std::size_t>(i)];
    }
    for (Index j = 0; j < p_; ++j)
      for (Index k = 0; k < p_; ++k) {
        std::int64_t s = 0;
        for (Index i = 0; i < r_; ++i) s += at(i, j) * at(i, k);
        g(j, k) = s;
      }
  }

  // Tries swapping rows a and b in column j; applies it when the sum of
  // squared off-diagonal Gram entries strictly decreases.
  bool try_swap(Index j, Index a, Index b) {
    const std::int64_t diff = at(b, j) - at(a, j);
    if (diff == 0) return false;
    std::int64_t change = 0;
    for (Index k = 0; k < p_; ++k) {
      if (k == j) continue;
      const std::int64_t delta = diff * (at(a, k) - at(b, k));
      change += delta * (2 * g(j, k) + delta);
    }
    if (change >= 0) return false;
    for (Index k = 0; k < p_; ++k) {
      if (k == j) continue;
      const std::int64_t delta = diff * (at(a, k) - at(b, k));
      g(j, k) += delta;
      g(k, j) += delta;
    }
    std::swap(at(a, j), at(b, j));
    return true;
  }

  double kappa() const {
    Matrix gram(p_, p_);
    for (Index j = 0; j < p_; ++j)
      for (Index k = 0; k < p_; ++k) gram(j, k) = static_cast<double>(g(j, k));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return eig.eigenvalues()(p_ - 1) / lo;
  }

  Matrix to_points() const {
    Matrix out(r_, p_);
    const Vector levels = lhd_levels(r_);
    for (Index i = 0; i < r_; ++i)
      for (Index j = 0; j < p_; ++j) out(i, j) = levels((at(i, j) + r_ - 1) / 2);
    return out;
  }

 private:
  std::int64_t& at(Index i, Index j) { return a_[static_cast<std::size_t>(j * r_ + i)]; }
  std::int64_t at(Index i, Index j) const { return a_[static_cast<std::size_t>(j * r_ + i)]; }
  std::int64_t& g(Index j, Index k) { return gram_[static_cast<std::size_t>(j * p_ + k)]; }
  std::int64_t g(Index j, Index k) const { return gram_[static_cast<std::size_t>(j * p_ + k)]; }

  Index r_;
  Index p_;
  std::vector<std::int64_t> a_;
  std::vector<std::int64_t> gram_;
};

}  // namespace

DesignMatrix generate_olhd(Index r, Index p, Rng& rng, const OlhdOptions& options) {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "p must be positive");
  if (r <= p || r < 2)
    throw Error(ErrorKind::InfeasibleDesign,
                "r = " + std::to_string(r) + " runs cannot give a nonsingular design in p = " + std::to_string(p));

  SwapSearch search(r, p);
  Matrix best_points;
  double best_kappa = std::numeric_limits<double>::infinity();

  const int restarts = std::max(1, options.max_restarts);
  const Index sweep = r * p;
  const Index sweeps = std::max<Index>(1, options.swap_budget_factor);
  std::uniform_int_distribution<Index> pick_col(0, p - 1);
  std::uniform_int_distribution<Index> pick_row(0, r - 1);

  for (int attempt = 0; attempt < restarts && best_kappa > options.kappa_target; ++attempt) {
    search.randomize(rng);
    double kappa = search.kappa();
    for (Index s = 0; s < sweeps && kappa > options.kappa_target && p > 1; ++s) {
      Index accepted = 0;
      for (Index t = 0; t < sweep; ++t) {
        const Index j = pick_col(rng);
        const Index a = pick_row(rng);
        const Index b = pick_row(rng);
        if (a != b && search.try_swap(j, a, b)) ++accepted;
      }
      kappa = search.kappa();
      if (accepted == 0) break;  // local minimum of the correlation criterion
    }
    if (kappa < best_kappa) {
      best_kappa = kappa;
      best_points = search.to_points();
    }
  }

  DesignMatrix d;
  d.points = std::move(best_points);
  d.box = Box::cube(p);
  d.kappa = design_kappa(d.points);
  d.max_abs_corr = max_abs_column_correlation(d.points);
  return d;
}

DesignMatrix rescale_design(const DesignMatrix& design, const Box& box) {
  box.validate();
  if (box.dims() != design.points.cols()) throw Error(ErrorKind::InvalidArgument, "box dimension mismatch");
  DesignMatrix out;
  out.points.resize(design.points.rows(), design.points.cols());
  // Through the unit interval [-1, 1]: x -> mid + half * t.
  for (Index j = 0; j < box.dims(); ++j) {
    const double src_mid = 0.5 * (design.box.lower(j) + design.box.upper(j));
    const double src_half = 0.5 * (design.box.upper(j) - design.box.lower(j));
    const double dst_mid = 0.5 * (box.lower(j) + box.upper(j));
    const double dst_half = 0.5 * (box.upper(j) - box.lower(j));
    for (Index i = 0; i < design.points.rows(); ++i)
      out.points(i, j) = dst_mid + dst_half * ((design.points(i, j) - src_mid) / src_half);
  }
  out.box = box;
  out.kappa = design_kappa(out.points);
  out.max_abs_corr = max_abs_column_correlation(out.points);
  return out;
}

}  // namespace lowcon::designs
