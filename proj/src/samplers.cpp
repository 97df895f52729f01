#include "lowcon/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "lowcon/error.hpp"
#include "lowcon/linalg.hpp"
#include "lowcon/spatial_index.hpp"

namespace lowcon::samplers {
namespace {

void require_rows(const Matrix& x, Index r, const char* method) {
  if (r < 1) throw Error(ErrorKind::InvalidArgument, std::string(method) + ": r must be positive");
  if (x.rows() < r)
    throw Error(ErrorKind::InvalidArgument, std::string(method) + ": r = " + std::to_string(r) +
                                                " exceeds the sample size " + std::to_string(x.rows()));
}

SubsampleSelection draw_with_replacement(const Vector& pi, Index r, Rng& rng, Method method) {
  std::discrete_distribution<Index> dist(pi.data(), pi.data() + pi.size());
  SubsampleSelection s;
  s.method = method;
  s.indices.resize(static_cast<std::size_t>(r));
  Vector w(r);
  for (Index k = 0; k < r; ++k) {
    const Index i = dist(rng);
    s.indices[static_cast<std::size_t>(k)] = i;
    w(k) = 1.0 / (static_cast<double>(r) * pi(i));
  }
  s.weights = std::move(w);
  return s;
}

void fill_kappa(SubsampleSelection& s, const Matrix& model) {
  s.diagnostics.kappa_sub = linalg::condition_number_info(take_rows(model, s.indices));
}

// Quantile with linear interpolation between order statistics.
double sorted_quantile(const std::vector<double>& sorted, double prob) {
  const double h = static_cast<double>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::Unif: return "UNIF";
    case Method::Blev: return "BLEV";
    case Method::Slev: return "SLEV";
    case Method::Levunw: return "LEVUNW";
    case Method::Iboss: return "IBOSS";
    case Method::Lowcon: return "LOWCON";
  }
  return "UNKNOWN";
}

Method parse_method(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Method m : {Method::Unif, Method::Blev, Method::Slev, Method::Levunw, Method::Iboss, Method::Lowcon})
    if (method_name(m) == upper) return m;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

Matrix take_rows(const Matrix& x, const std::vector<Index>& indices) {
  Matrix out(static_cast<Index>(indices.size()), x.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) out.row(static_cast<Index>(k)) = x.row(indices[k]);
  return out;
}

Matrix ScalingSpec::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double width = max(j) - min(j);
    out.col(j) = (2.0 * (x.col(j).array() - min(j)) / width - 1.0).matrix();
  }
  return out;
}

Matrix ScalingSpec::invert(const Matrix& scaled) const {
  Matrix out(scaled.rows(), scaled.cols());
  for (Index j = 0; j < scaled.cols(); ++j) {
    const double width = max(j) - min(j);
    out.col(j) = (min(j) + (scaled.col(j).array() + 1.0) * 0.5 * width).matrix();
  }
  return out;
}

Scaled scale_to_cube(const Matrix& x) {
  if (x.rows() < 1 || x.cols() < 1) throw Error(ErrorKind::InvalidArgument, "empty sample");
  if (!x.allFinite()) throw Error(ErrorKind::InvalidArgument, "sample has non-finite entries");
  ScalingSpec spec{x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
  for (Index j = 0; j < x.cols(); ++j)
    if (!(spec.max(j) > spec.min(j))) throw Error(ErrorKind::ConstantColumn, "column " + std::to_string(j));
  Matrix points = spec.apply(x);
  return {std::move(points), std::move(spec)};
}

designs::Box theta_box(const Matrix& scaled, double theta) {
  if (!(theta >= 0.0 && theta < 50.0)) throw Error(ErrorKind::InvalidArgument, "theta must lie in [0, 50)");
  const Index p = scaled.cols();
  designs::Box box{Vector(p), Vector(p)};
  std::vector<double> column(static_cast<std::size_t>(scaled.rows()));
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < scaled.rows(); ++i) column[static_cast<std::size_t>(i)] = scaled(i, j);
    std::sort(column.begin(), column.end());
    box.lower(j) = sorted_quantile(column, theta / 100.0);
    box.upper(j) = sorted_quantile(column, (100.0 - theta) / 100.0);
    if (!(box.lower(j) < box.upper(j)))
      throw Error(ErrorKind::DegenerateBox, "percentile interval collapses in column " + std::to_string(j));
  }
  return box;
}

std::pair<std::vector<Index>, double> match_design(const Matrix& scaled_sample, const Matrix& design_points,
                                                   bool allow_duplicates) {
  if (scaled_sample.cols() != design_points.cols())
    throw Error(ErrorKind::InvalidArgument, "design and sample dimensions differ");
  const spatial::PointIndex index(scaled_sample);
  spatial::ExclusionSet claimed(scaled_sample.rows());
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(design_points.rows()));
  double total = 0.0;
  for (Index i = 0; i < design_points.rows(); ++i) {
    const Vector q = design_points.row(i).transpose();
    const spatial::Neighbor nb = allow_duplicates ? index.nearest(q) : index.nearest(q, claimed);
    if (!allow_duplicates) claimed.insert(nb.index);
    picked.push_back(nb.index);
    total += nb.distance;
  }
  const double mean = design_points.rows() > 0 ? total / static_cast<double>(design_points.rows()) : 0.0;
  return {std::move(picked), mean};
}

LowconTrace lowcon_trace(const Matrix& x, Index r, Rng& rng, const LowconOptions& options) {
  require_rows(x, r, "LOWCON");
  if (r < x.cols() + 1)
    throw Error(ErrorKind::InvalidArgument, "LOWCON needs r >= p + 1 (r = " + std::to_string(r) + ")");
  const Scaled scaled = scale_to_cube(x);
  const designs::Box box = theta_box(scaled.points, options.theta);
  const designs::DesignMatrix canonical = designs::generate_olhd(r, x.cols(), rng, options.olhd);
  designs::DesignMatrix design = designs::rescale_design(canonical, box);
  // The rescaled design keeps the canonical kappa as the achieved OLHD quality.
  design.kappa = canonical.kappa;

  auto [indices, mean_distance] = match_design(scaled.points, design.points, options.allow_duplicates);

  LowconTrace trace;
  trace.selection.method = Method::Lowcon;
  trace.selection.indices = std::move(indices);
  trace.selection.diagnostics.mean_nn_distance = mean_distance;
  fill_kappa(trace.selection, x);
  trace.scaled_selected = take_rows(scaled.points, trace.selection.indices);
  trace.design = std::move(design);
  return trace;
}

SubsampleSelection lowcon(const Matrix& x, Index r, Rng& rng, const LowconOptions& options) {
  return lowcon_trace(x, r, rng, options).selection;
}

SubsampleSelection unif(const Matrix& x, Index r, Rng& rng) {
  require_rows(x, r, "UNIF");
  const Index n = x.rows();
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index k = 0; k < r; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  SubsampleSelection s;
  s.method = Method::Unif;
  s.indices.assign(pool.begin(), pool.begin() + r);
  fill_kappa(s, x);
  return s;
}

Vector leverage_probabilities(const Matrix& x, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1]");
  const Vector h = linalg::leverage_scores(x);
  const auto n = static_cast<double>(x.rows());
  const auto p = static_cast<double>(x.cols());
  return (alpha * h.array() / p + (1.0 - alpha) / n).matrix();
}

SubsampleSelection blev(const Matrix& x, Index r, Rng& rng) {
  require_rows(x, r, "BLEV");
  SubsampleSelection s = draw_with_replacement(leverage_probabilities(x, 1.0), r, rng, Method::Blev);
  fill_kappa(s, x);
  return s;
}

SubsampleSelection slev(const Matrix& x, Index r, Rng& rng, double alpha) {
  require_rows(x, r, "SLEV");
  SubsampleSelection s = draw_with_replacement(leverage_probabilities(x, alpha), r, rng, Method::Slev);
  fill_kappa(s, x);
  return s;
}

SubsampleSelection levunw(const Matrix& x, Index r, Rng& rng) {
  SubsampleSelection s = blev(x, r, rng);
  s.method = Method::Levunw;
  s.weights.reset();
  return s;
}

SubsampleSelection iboss(const Matrix& x, Index r) {
  require_rows(x, r, "IBOSS");
  const Index p = x.cols();
  if (r < 2 * p) throw Error(ErrorKind::InvalidArgument, "IBOSS needs r >= 2p");
  const Index per_side = r / (2 * p);

  std::vector<Index> pool(static_cast<std::size_t>(x.rows()));
  std::iota(pool.begin(), pool.end(), Index{0});
  SubsampleSelection s;
  s.method = Method::Iboss;
  s.indices.reserve(static_cast<std::size_t>(r));

  // Moves the `count` most extreme rows of column j out of the pool.
  auto take = [&](Index j, Index count, bool smallest) {
    if (count <= 0) return;
    auto cmp = [&](Index a, Index b) {
      const double va = x(a, j);
      const double vb = x(b, j);
      if (va != vb) return smallest ? va < vb : va > vb;
      return a < b;
    };
    auto mid = pool.begin() + count;
    std::nth_element(pool.begin(), mid - 1, pool.end(), cmp);
    std::sort(pool.begin(), mid, cmp);
    s.indices.insert(s.indices.end(), pool.begin(), mid);
    pool.erase(pool.begin(), mid);
  };

  for (Index j = 0; j < p; ++j) {
    take(j, per_side, true);
    take(j, per_side, false);
  }
  const Index remainder = r - 2 * p * per_side;
  for (Index k = 0; k < remainder; ++k) take(0, 1, k % 2 == 0);

  fill_kappa(s, x);
  return s;
}

SubsampleSelection select(Method method, const Matrix& predictors, const Matrix& model, Index r, Rng& rng,
                          const SamplerParams& params) {
  if (predictors.rows() != model.rows()) throw Error(ErrorKind::InvalidArgument, "predictor/model row mismatch");
  SubsampleSelection s;
  switch (method) {
    case Method::Unif: s = unif(predictors, r, rng); break;
    case Method::Blev: s = blev(model, r, rng); break;
    case Method::Slev: s = slev(model, r, rng, params.slev_alpha); break;
    case Method::Levunw: s = levunw(model, r, rng); break;
    case Method::Iboss: s = iboss(predictors, r); break;
    case Method::Lowcon: s = lowcon(predictors, r, rng, params.lowcon); break;
  }
  if (&predictors != &model) fill_kappa(s, model);
  return s;
}

}  // namespace lowcon::samplers
