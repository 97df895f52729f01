#include "lowcon/datagen.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "lowcon/error.hpp"

namespace lowcon::datagen {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Matrix cholesky_factor(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidArgument, "covariance is not positive definite");
  return llt.matrixL();
}

Vector standard_normal(Index p, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(p);
  for (Index j = 0; j < p; ++j) v(j) = z(rng);
  return v;
}

// Unit-constant form of each term.
double unit_term(MisspecKind kind, const Eigen::Ref<const Vector>& x) {
  switch (kind) {
    case MisspecKind::H1: return 0.0;
    case MisspecKind::H2: return std::sin(x(2));
    case MisspecKind::H3: return x(2) * x(7);
    case MisspecKind::H4: return x(2) * std::sin(x(7));
    case MisspecKind::H5: return x(2) * x(2);
  }
  return 0.0;
}

void check_dims(MisspecKind kind, Index p) {
  const Index needed = (kind == MisspecKind::H3 || kind == MisspecKind::H4) ? 8 : (kind == MisspecKind::H1 ? 0 : 3);
  if (p < needed)
    throw Error(ErrorKind::DimensionTooSmall, std::string(to_string(kind)) + " needs p >= " + std::to_string(needed));
}

}  // namespace

std::string_view to_string(Distribution d) noexcept {
  switch (d) {
    case Distribution::D1: return "D1";
    case Distribution::D2: return "D2";
    case Distribution::D3: return "D3";
  }
  return "?";
}

std::string_view to_string(MisspecKind h) noexcept {
  switch (h) {
    case MisspecKind::H1: return "H1";
    case MisspecKind::H2: return "H2";
    case MisspecKind::H3: return "H3";
    case MisspecKind::H4: return "H4";
    case MisspecKind::H5: return "H5";
  }
  return "?";
}

Distribution parse_distribution(std::string_view s) {
  const std::string u = upper(s);
  for (Distribution d : {Distribution::D1, Distribution::D2, Distribution::D3})
    if (to_string(d) == u) return d;
  throw Error(ErrorKind::InvalidArgument, "unknown distribution '" + std::string(s) + "'");
}

MisspecKind parse_misspec(std::string_view s) {
  const std::string u = upper(s);
  for (MisspecKind h : {MisspecKind::H1, MisspecKind::H2, MisspecKind::H3, MisspecKind::H4, MisspecKind::H5})
    if (to_string(h) == u) return h;
  throw Error(ErrorKind::InvalidArgument, "unknown misspecification '" + std::string(s) + "'");
}

Matrix covariance(Index p) {
  Matrix sigma(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) sigma(i, j) = 10.0 * std::pow(0.6, static_cast<double>(std::abs(i - j)));
  return sigma;
}

Vector beta0(Index p) {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "p must be positive");
  const auto edge = static_cast<Index>(std::ceil(0.2 * static_cast<double>(p) - 1e-12));
  Vector b = Vector::Constant(p, 0.1);
  for (Index j = 0; j < std::min(edge, p); ++j) {
    b(j) = 1.0;
    b(p - 1 - j) = 1.0;
  }
  return b;
}

Matrix gen_predictors(Distribution dist, Index n, Index p, Rng& rng, double t_df) {
  if (n < 1 || p < 1) throw Error(ErrorKind::InvalidArgument, "n and p must be positive");
  const Matrix chol = cholesky_factor(covariance(p));
  const Vector ones = Vector::Ones(p);
  Matrix x(n, p);
  std::bernoulli_distribution coin(0.5);
  std::chi_squared_distribution<double> chi2(t_df);
  for (Index i = 0; i < n; ++i) {
    const Vector z = chol * standard_normal(p, rng);
    switch (dist) {
      case Distribution::D1: x.row(i) = (ones + z).transpose(); break;
      case Distribution::D2:
        if (coin(rng))
          x.row(i) = (std::sqrt(2.0) * z).transpose();
        else
          x.row(i) = (ones + z).transpose();
        break;
      case Distribution::D3: x.row(i) = (ones + z / std::sqrt(chi2(rng) / t_df)).transpose(); break;
    }
  }
  return x;
}

double misspec_value(MisspecKind kind, const Eigen::Ref<const Vector>& x, double constant) {
  check_dims(kind, x.size());
  if (kind == MisspecKind::H1) return 0.0;
  if (kind == MisspecKind::H2) return 10.0 * unit_term(kind, x);
  return constant * unit_term(kind, x);
}

double calibrate_constant(MisspecKind kind, const Matrix& x) {
  check_dims(kind, x.cols());
  if (kind == MisspecKind::H1) return 0.0;
  if (kind == MisspecKind::H2) return 10.0;
  double largest = 0.0;
  for (Index i = 0; i < x.rows(); ++i) largest = std::max(largest, std::abs(unit_term(kind, x.row(i).transpose())));
  if (!(largest > 0.0) || !std::isfinite(largest))
    throw Error(ErrorKind::DegenerateSample, "misspecification term vanishes on the sample");
  return 10.0 / largest;
}

MisspecTerm calibrated(MisspecKind kind, const Matrix& x) { return {kind, calibrate_constant(kind, x)}; }

Vector misspec_vector(const MisspecTerm& term, const Matrix& x) {
  Vector h(x.rows());
  for (Index i = 0; i < x.rows(); ++i) h(i) = misspec_value(term.kind, x.row(i).transpose(), term.constant);
  return h;
}

Vector gen_response(const Matrix& x, const Vector& beta, const MisspecTerm& misspec, double sigma2, Rng& rng) {
  if (beta.size() != x.cols()) throw Error(ErrorKind::InvalidArgument, "beta0 length must equal p");
  if (!(sigma2 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma2 must be nonnegative");
  const double sigma = std::sqrt(sigma2);
  std::normal_distribution<double> z(0.0, 1.0);
  Vector y = x * beta + misspec_vector(misspec, x);
  for (Index i = 0; i < y.size(); ++i) y(i) += sigma * z(rng);
  return y;
}

std::pair<Vector, Vector> toy_example(Index n, Rng& rng, const ToyOptions& options) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (!(options.x_df >= 0.0)) throw Error(ErrorKind::InvalidArgument, "x_df must be nonnegative");
  std::student_t_distribution<double> tx(options.x_df > 0.0 ? options.x_df : 1.0);
  std::normal_distribution<double> eps(0.0, 1.0);
  auto draw_x = [&] {
    if (options.x_df > 0.0) return tx(rng);
    for (;;) {
      const double z = eps(rng);
      if (std::abs(z) <= 3.0) return z;
    }
  };
  Vector x(n);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i) = draw_x();
    const double e = options.noise_sd * eps(rng);
    y(i) = x(i) + std::sin(x(i) * x(i)) / 2.0 + e;
  }
  return {std::move(x), std::move(y)};
}

}  // namespace lowcon::datagen
