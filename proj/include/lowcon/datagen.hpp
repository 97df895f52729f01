#pragma once

#include <string_view>
#include <utility>

#include "lowcon/random.hpp"
#include "lowcon/types.hpp"

namespace lowcon::datagen {

enum class Distribution { D1, D2, D3 };
enum class MisspecKind { H1, H2, H3, H4, H5 };

std::string_view to_string(Distribution d) noexcept;
std::string_view to_string(MisspecKind h) noexcept;
Distribution parse_distribution(std::string_view s);
MisspecKind parse_misspec(std::string_view s);

/// Sigma_ij = 10 * 0.6^|i - j|.
Matrix covariance(Index p);

/// First and last ceil(0.2 p) entries 1, the rest 0.1.
Vector beta0(Index p);

/// D1: N(1, Sigma); D2: fair mixture of N(0, 2 Sigma) and N(1, Sigma);
/// D3: multivariate t with `df` degrees of freedom, location 1, scale Sigma.
Matrix gen_predictors(Distribution dist, Index n, Index p, Rng& rng, double t_df = 10.0);

struct MisspecTerm {
  MisspecKind kind = MisspecKind::H1;
  double constant = 0.0;
};

/// h(x) with 1-based coordinates 3 and 8. Throws DimensionTooSmall.
double misspec_value(MisspecKind kind, const Eigen::Ref<const Vector>& x, double constant);

/// 10 / max_i |g(x_i)| where g is the term with unit constant.
/// H1 gets 0 and H2 its fixed 10. Throws DegenerateSample.
double calibrate_constant(MisspecKind kind, const Matrix& x);

MisspecTerm calibrated(MisspecKind kind, const Matrix& x);

/// h evaluated on every row.
Vector misspec_vector(const MisspecTerm& term, const Matrix& x);

/// y_i = x_i^T beta0 + h(x_i) + sigma z_i.
Vector gen_response(const Matrix& x, const Vector& beta0, const MisspecTerm& misspec, double sigma2, Rng& rng);

struct ToyOptions {
  // x ~ Student t with this many degrees of freedom; 0 selects N(0, 1)
  // truncated to [-3, 3].
  double x_df = 5.0;
  double noise_sd = 1.0;
};

/// y_i = x_i + sin(x_i^2) / 2 + eps_i.
std::pair<Vector, Vector> toy_example(Index n, Rng& rng, const ToyOptions& options = {});

}  // namespace lowcon::datagen
