#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "lowcon/designs.hpp"
#include "lowcon/random.hpp"
#include "lowcon/types.hpp"

namespace lowcon::samplers {

enum class Method { Unif, Blev, Slev, Levunw, Iboss, Lowcon };

std::string_view method_name(Method m) noexcept;
/// Parses UNIF/BLEV/SLEV/LEVUNW/IBOSS/LOWCON (case-insensitive).
Method parse_method(std::string_view name);

struct SelectionDiagnostics {
  double kappa_sub = 0.0;
  std::optional<double> mean_nn_distance;
};

struct SubsampleSelection {
  std::vector<Index> indices;
  std::optional<Vector> weights;  // 1 / (r * pi_i) for weighted fits
  Method method = Method::Unif;
  SelectionDiagnostics diagnostics;

  Index size() const { return static_cast<Index>(indices.size()); }
};

/// Per-column range of the raw sample.
struct ScalingSpec {
  Vector min;
  Vector max;

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& scaled) const;
};

struct Scaled {
  Matrix points;
  ScalingSpec spec;
};

/// Maps each column onto [-1, 1]. Throws ConstantColumn.
Scaled scale_to_cube(const Matrix& x);

/// Per-column [theta, 100 - theta] percentile box (linear interpolation).
/// Throws DegenerateBox.
designs::Box theta_box(const Matrix& scaled, double theta);

struct LowconOptions {
  double theta = 1.0;
  designs::OlhdOptions olhd;
  // Literal reading of the nearest-neighbour step: design points may share a
  // sample point.
  bool allow_duplicates = false;
};

/// Detailed LowCon output, used by the diagnostics.
struct LowconTrace {
  SubsampleSelection selection;
  designs::DesignMatrix design;  // rescaled into the theta box
  Matrix scaled_selected;        // selected rows in the scaled cube
};

/// Claims, for every design point in order, its nearest sample point
/// (unclaimed ones only unless allow_duplicates). Returns indices and the
/// mean design-to-sample distance.
std::pair<std::vector<Index>, double> match_design(const Matrix& scaled_sample, const Matrix& design_points,
                                                   bool allow_duplicates = false);

LowconTrace lowcon_trace(const Matrix& x, Index r, Rng& rng, const LowconOptions& options = {});
SubsampleSelection lowcon(const Matrix& x, Index r, Rng& rng, const LowconOptions& options = {});

SubsampleSelection unif(const Matrix& x, Index r, Rng& rng);
SubsampleSelection blev(const Matrix& x, Index r, Rng& rng);
SubsampleSelection slev(const Matrix& x, Index r, Rng& rng, double alpha = 0.9);
SubsampleSelection levunw(const Matrix& x, Index r, Rng& rng);
SubsampleSelection iboss(const Matrix& x, Index r);

/// Sampling probabilities alpha * h_ii / p + (1 - alpha) / n.
Vector leverage_probabilities(const Matrix& x, double alpha = 1.0);

struct SamplerParams {
  double slev_alpha = 0.9;
  LowconOptions lowcon;
};

/// Dispatches to one method. `predictors` feeds the space-based methods
/// (LOWCON, IBOSS, UNIF); `model` (predictors plus any intercept column)
/// feeds the leverage-based ones. kappa_sub is computed on `model` rows.
SubsampleSelection select(Method method, const Matrix& predictors, const Matrix& model, Index r, Rng& rng,
                          const SamplerParams& params = {});

/// Gathers rows of x.
Matrix take_rows(const Matrix& x, const std::vector<Index>& indices);

}  // namespace lowcon::samplers
