#pragma once

#include <optional>

#include "lowcon/types.hpp"

namespace lowcon::linalg {

/// Singular values, nonincreasing, length min(rows, cols).
struct SingularSpectrum {
  Vector values;

  double largest() const { return values(0); }
  double smallest() const { return values(values.size() - 1); }
};

/// Relative cutoff for numerical rank: s_p < max(r, p) * s_1 * 1e-12.
inline constexpr double kRankTolerance = 1e-12;

SingularSpectrum singular_values(const Matrix& a);

/// True when the smallest singular value is below the rank cutoff.
bool is_rank_deficient(const SingularSpectrum& s, Index rows, Index cols);

/// Weighted least squares by row scaling with sqrt(w), solved through a
/// Householder QR. Throws RankDeficient.
Vector least_squares(const Matrix& x, const Vector& y,
                     const std::optional<Vector>& weights = std::nullopt);

/// (s_1 / s_p)^2, i.e. the condition number of X^T X. +inf when rank deficient.
double condition_number_info(const Matrix& x);

/// Diagonal of the hat matrix, computed as squared row norms of the thin Q factor.
Vector leverage_scores(const Matrix& x);

/// tr[(X^T X)^{-1}] = sum_j 1 / s_j^2.
double trace_inverse_gram(const SingularSpectrum& s);

/// Solves (X^T X) z = b using the R factor of X (two triangular solves).
Vector solve_gram(const Matrix& x, const Vector& b);

}  // namespace lowcon::linalg
