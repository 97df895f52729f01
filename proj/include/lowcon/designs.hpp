#pragma once

#include <cstddef>

#include "lowcon/random.hpp"
#include "lowcon/types.hpp"

namespace lowcon::designs {

/// Axis-aligned box [lower_j, upper_j] per dimension.
struct Box {
  Vector lower;
  Vector upper;

  static Box cube(Index p, double half_width = 1.0);
  Index dims() const { return lower.size(); }
  bool contains(const Eigen::Ref<const Vector>& x, double slack = 0.0) const;
  void validate() const;
};

struct DesignMatrix {
  Matrix points;       // r x p
  Box box;             // design space the points live in
  double kappa = 1.0;  // condition number of points^T points
  double max_abs_corr = 0.0;
};

struct OlhdOptions {
  double kappa_target = 1.13;
  int max_restarts = 20;
  // Swap proposals per restart = swap_budget_factor * r * p.
  int swap_budget_factor = 200;
};

/// Levels (2k - 1 - r) / r for k = 1..r, ascending.
Vector lhd_levels(Index r);

/// Each column an independent uniform permutation of lhd_levels(r).
DesignMatrix generate_lhd(Index r, Index p, Rng& rng);

/// Low-correlation Latin hypercube found by a column-swap search.
///
/// Every restart begins from a fresh random LHD and proposes within-column
/// swaps of two levels. A swap is accepted when it lowers the sum of squared
/// pairwise column correlations (exact integer arithmetic on the level
/// numerators). The achieved kappa is checked after every sweep of r*p
/// proposals; the search stops as soon as it is at or below kappa_target.
/// When no restart reaches the target the lowest-kappa design is returned,
/// with its kappa reported.
///
/// Throws InfeasibleDesign when r <= p.
DesignMatrix generate_olhd(Index r, Index p, Rng& rng, const OlhdOptions& options = {});

/// Per-column affine map from [-1, 1] to [lower_j, upper_j].
DesignMatrix rescale_design(const DesignMatrix& design, const Box& box);

/// Condition number and largest |column correlation| of a design.
double design_kappa(const Matrix& points);
double max_abs_column_correlation(const Matrix& points);

}  // namespace lowcon::designs
