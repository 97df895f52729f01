#pragma once

#include <cstdint>
#include <vector>

#include "lowcon/types.hpp"

namespace lowcon::spatial {

/// Set of claimed row indices, as a flat mask.
class ExclusionSet {
 public:
  explicit ExclusionSet(Index n = 0) : mask_(static_cast<std::size_t>(n), false) {}

  void insert(Index i);
  bool contains(Index i) const { return mask_[static_cast<std::size_t>(i)]; }
  Index size() const { return count_; }
  Index capacity() const { return static_cast<Index>(mask_.size()); }

 private:
  std::vector<bool> mask_;
  Index count_ = 0;
};

struct Neighbor {
  Index index = -1;
  double distance = 0.0;
};

/// Exact Euclidean nearest-neighbour index (k-d tree, widest-spread split at
/// the median). Ties are broken by the smallest original row index.
class PointIndex {
 public:
  explicit PointIndex(Matrix points);

  Index size() const { return points_.rows(); }
  Index dims() const { return points_.cols(); }
  const Matrix& points() const { return points_; }

  /// Nearest non-excluded row. Throws Exhausted when every row is excluded.
  Neighbor nearest(const Eigen::Ref<const Vector>& query, const ExclusionSet& excluded) const;
  Neighbor nearest(const Eigen::Ref<const Vector>& query) const;

 private:
  struct Node {
    Index begin = 0;  // range into order_
    Index end = 0;
    Index split_dim = -1;  // -1 for leaves
    double split_value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(Index begin, Index end);
  void search(std::int32_t node, const Eigen::Ref<const Vector>& q, const ExclusionSet* excluded,
              double& best_d2, Index& best_index) const;
  double squared_distance(Index row, const Eigen::Ref<const Vector>& q) const;

  Matrix points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

/// Reference linear scan with the same distance arithmetic and tie rule.
Neighbor linear_scan_nearest(const Matrix& points, const Eigen::Ref<const Vector>& query,
                             const ExclusionSet* excluded = nullptr);

}  // namespace lowcon::spatial
