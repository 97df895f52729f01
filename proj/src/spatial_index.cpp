#include "lowcon/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lowcon/error.hpp"

namespace lowcon::spatial {
namespace {

constexpr Index kLeafSize = 8;

bool better(double d2, Index i, double best_d2, Index best_i) {
  return d2 < best_d2 || (d2 == best_d2 && i < best_i);
}

}  // namespace

void ExclusionSet::insert(Index i) {
  auto ref = mask_.at(static_cast<std::size_t>(i));
  if (!ref) {
    ref = true;
    ++count_;
  }
}

PointIndex::PointIndex(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw Error(ErrorKind::InvalidArgument, "index needs at least one point");
  if (!points_.allFinite()) throw Error(ErrorKind::InvalidArgument, "points must be finite");
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / kLeafSize + 2));
  build(0, points_.rows());
}

std::int32_t PointIndex::build(Index begin, Index end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Index dim = 0;
  double widest = -1.0;
  for (Index j = 0; j < dims(); ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Index k = begin; k < end; ++k) {
      const double v = points_(order_[static_cast<std::size_t>(k)], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      dim = j;
    }
  }
  if (widest <= 0.0) return id;  // all points identical: keep as one leaf

  const Index mid = begin + (end - begin) / 2;
  auto first = order_.begin() + begin;
  std::nth_element(first, order_.begin() + mid, order_.begin() + end, [&](Index a, Index b) {
    const double va = points_(a, dim);
    const double vb = points_(b, dim);
    return va < vb || (va == vb && a < b);
  });
  const double split = points_(order_[static_cast<std::size_t>(mid)], dim);

  nodes_[static_cast<std::size_t>(id)].split_dim = dim;
  nodes_[static_cast<std::size_t>(id)].split_value = split;
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double PointIndex::squared_distance(Index row, const Eigen::Ref<const Vector>& q) const {
  double s = 0.0;
  for (Index j = 0; j < dims(); ++j) {
    const double d = q(j) - points_(row, j);
    s += d * d;
  }
  return s;
}

void PointIndex::search(std::int32_t node_id, const Eigen::Ref<const Vector>& q, const ExclusionSet* excluded,
                        double& best_d2, Index& best_index) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.split_dim < 0) {
    for (Index k = node.begin; k < node.end; ++k) {
      const Index row = order_[static_cast<std::size_t>(k)];
      if (excluded && excluded->contains(row)) continue;
      const double d2 = squared_distance(row, q);
      if (better(d2, row, best_d2, best_index)) {
        best_d2 = d2;
        best_index = row;
      }
    }
    return;
  }
  const double diff = q(node.split_dim) - node.split_value;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, excluded, best_d2, best_index);
  // Equality is not pruned: the far side may hold a tie with a smaller index.
  if (diff * diff <= best_d2) search(far, q, excluded, best_d2, best_index);
}

Neighbor PointIndex::nearest(const Eigen::Ref<const Vector>& query, const ExclusionSet& excluded) const {
  if (query.size() != dims()) throw Error(ErrorKind::InvalidArgument, "query dimension mismatch");
  if (excluded.capacity() != size()) throw Error(ErrorKind::InvalidArgument, "exclusion set size mismatch");
  if (excluded.size() >= size()) throw Error(ErrorKind::Exhausted, "every point is excluded");
  double best_d2 = std::numeric_limits<double>::infinity();
  Index best = std::numeric_limits<Index>::max();
  search(0, query, &excluded, best_d2, best);
  return {best, std::sqrt(best_d2)};
}

Neighbor PointIndex::nearest(const Eigen::Ref<const Vector>& query) const {
  if (query.size() != dims()) throw Error(ErrorKind::InvalidArgument, "query dimension mismatch");
  double best_d2 = std::numeric_limits<double>::infinity();
  Index best = std::numeric_limits<Index>::max();
  search(0, query, nullptr, best_d2, best);
  return {best, std::sqrt(best_d2)};
}

Neighbor linear_scan_nearest(const Matrix& points, const Eigen::Ref<const Vector>& query,
                             const ExclusionSet* excluded) {
  double best_d2 = std::numeric_limits<double>::infinity();
  Index best = -1;
  for (Index i = 0; i < points.rows(); ++i) {
    if (excluded && excluded->contains(i)) continue;
    double s = 0.0;
    for (Index j = 0; j < points.cols(); ++j) {
      const double d = query(j) - points(i, j);
      s += d * d;
    }
    if (best < 0 || s < best_d2) {
      best_d2 = s;
      best = i;
    }
  }
  if (best < 0) throw Error(ErrorKind::Exhausted, "every point is excluded");
  return {best, std::sqrt(best_d2)};
}

}  // namespace lowcon::spatial
