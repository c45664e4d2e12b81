#ifndef QMOMENT_TOMOGRAPHY_HPP
#define QMOMENT_TOMOGRAPHY_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmoment/combinatorics.hpp"
#include "qmoment/error.hpp"
#include "qmoment/fock_oracle.hpp"
#include "qmoment/hermite.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/moments.hpp"

namespace qmoment {

enum class XQuadrature {
  /// Gauss-Hermite nodes scaled by `x_scale`; exact for e^{-(x/s)^2} * polynomial.
  GaussHermite,
  /// Composite trapezoid on arbitrary (sorted) nodes.
  Trapezoid,
  /// Histogram bins: nodes are bin centres, weights bin widths.
  Midpoint,
};

/// Sampled optical tomogram w(X, theta) on equispaced angles in [0, 2 pi)
/// and an X quadrature. values(j, i) = w(xs[i], thetas[j]).
struct TomogramGrid {
  std::vector<double> thetas;
  std::vector<double> xs;
  std::vector<double> x_weights;
  XQuadrature quadrature = XQuadrature::GaussHermite;
  double x_scale = 1.0;
  Eigen::MatrixXd values;

  int n_theta() const { return static_cast<int>(thetas.size()); }
  int n_x() const { return static_cast<int>(xs.size()); }

  /// Polynomial degree (against the Gaussian weight) integrated exactly
  /// in X, or -1 for trapezoid grids.
  int exact_degree() const { return quadrature == XQuadrature::GaussHermite ? 2 * n_x() - 1 : -1; }

  /// int w(X, thetas[row]) dX
  double row_integral(int row) const {
    double s = 0.0;
    for (int i = 0; i < n_x(); ++i) s += x_weights[i] * values(row, i);
    return s;
  }

  /// Throws InvalidParameter unless values >= -1e-9 and every row integrates to 1 within `tol`.
  void validate(double tol = 1e-6) const {
    if (values.rows() != n_theta() || values.cols() != n_x()) {
      throw Error(ErrorCode::DimensionMismatch, "tomogram values do not match the grid shape");
    }
    if (values.size() > 0 && values.minCoeff() < -1e-9) {
      throw Error(ErrorCode::InvalidParameter, "tomogram has negative values");
    }
    for (int j = 0; j < n_theta(); ++j) {
      if (std::abs(row_integral(j) - 1.0) > tol) {
        throw Error(ErrorCode::InvalidParameter,
                    "tomogram row " + std::to_string(j) + " integrates to " + std::to_string(row_integral(j)));
      }
    }
  }
};

/// <X_theta^r> for r = 0..max_order at each angle; values(j, r).
struct TomographicMoments {
  int max_order = 0;
  std::vector<double> thetas;
  Eigen::MatrixXd values;
  /// Per-entry standard errors when estimated from samples.
  std::optional<Eigen::MatrixXd> stderrs;
};

inline std::vector<double> equispaced_angles(int n_theta) {
  std::vector<double> thetas(n_theta);
  for (int j = 0; j < n_theta; ++j) thetas[j] = 2.0 * std::numbers::pi * j / n_theta;
  return thetas;
}

inline bool angles_equispaced(const std::vector<double>& thetas, double tol = 1e-9) {
  const int m = static_cast<int>(thetas.size());
  for (int j = 0; j < m; ++j) {
    if (std::abs(thetas[j] - 2.0 * std::numbers::pi * j / m) > tol) return false;
  }
  return m > 0;
}

/// Empty grid on `n_theta` equispaced angles and `n_x` Gauss-Hermite nodes scaled by `x_scale`.
inline TomogramGrid make_gauss_hermite_grid(int n_theta, int n_x, double x_scale = 1.0) {
  if (n_theta < 1 || n_x < 1) throw Error(ErrorCode::InvalidParameter, "grid sizes must be positive");
  const auto rule = gauss_hermite(n_x);
  TomogramGrid grid;
  grid.thetas = equispaced_angles(n_theta);
  grid.quadrature = XQuadrature::GaussHermite;
  grid.x_scale = x_scale;
  for (int i = 0; i < n_x; ++i) {
    grid.xs.push_back(x_scale * rule.nodes[i]);
    grid.x_weights.push_back(x_scale * rule.scaled_weights[i]);
  }
  grid.values = Eigen::MatrixXd::Zero(n_theta, n_x);
  return grid;
}

inline std::vector<double> trapezoid_weights(const std::vector<double>& xs) {
  std::vector<double> w(xs.size(), 0.0);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double h = 0.5 * (xs[i + 1] - xs[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

/// Attaches quadrature weights to externally supplied nodes: Gauss-Hermite
/// (with a common scale) when the nodes match such a rule, trapezoid otherwise.
inline TomogramGrid grid_from_samples(std::vector<double> thetas, std::vector<double> xs, Eigen::MatrixXd values) {
  if (xs.size() < 2) throw Error(ErrorCode::GridTooCoarse, "tomogram needs at least two X nodes");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorCode::InvalidParameter, "X nodes must be strictly increasing");
  }
  TomogramGrid grid;
  grid.thetas = std::move(thetas);
  grid.values = std::move(values);
  const auto rule = gauss_hermite(static_cast<int>(xs.size()));
  const double scale = xs.back() / rule.nodes.back();
  bool is_gh = scale > 0.0;
  for (std::size_t i = 0; is_gh && i < xs.size(); ++i) {
    is_gh = std::abs(xs[i] - scale * rule.nodes[i]) <= 1e-12 * std::max(1.0, std::abs(xs[i]));
  }
  if (is_gh) {
    grid.quadrature = XQuadrature::GaussHermite;
    grid.x_scale = scale;
    for (std::size_t i = 0; i < xs.size(); ++i) grid.x_weights.push_back(scale * rule.scaled_weights[i]);
  } else {
    grid.quadrature = XQuadrature::Trapezoid;
    grid.x_weights = trapezoid_weights(xs);
  }
  grid.xs = std::move(xs);
  return grid;
}

inline void fill_grid(TomogramGrid& grid, const std::function<double(double, double)>& w) {
  for (int j = 0; j < grid.n_theta(); ++j) {
    for (int i = 0; i < grid.n_x(); ++i) grid.values(j, i) = w(grid.thetas[j], grid.xs[i]);
  }
}

/// w(X, theta) = e^{-X^2}/sqrt(pi) sum_{n,m} <(a^dag)^n a^m> e^{i(n-m)theta}
///               H_{n+m}(X) / (sqrt(2^{n+m}) n! m!)
/// Antinormal tables are converted to normal order first.
inline double tomogram_from_moments(const MomentTable& table, double theta, double x) {
  if (table.ordering() == Ordering::Antinormal) return tomogram_from_moments(convert_ordering(table), theta, x);
  const int r = table.max_degree();
  const auto h = hermite_all(r, x);
  cplx sum{0.0, 0.0};
  for (int n = 0; n <= r; ++n) {
    for (int m = 0; n + m <= r; ++m) {
      const cplx v = table(n, m);
      if (v == cplx{0.0, 0.0}) continue;
      sum += v * std::polar(1.0, (n - m) * theta) * h[n + m] /
             (std::sqrt(std::ldexp(1.0, n + m)) * factorial(n) * factorial(m));
    }
  }
  return std::exp(-x * x) / std::sqrt(std::numbers::pi) * sum.real();
}

/// Symplectic tomogram w(X, mu, nu) from normally ordered moments.
inline double symplectic_tomogram_from_moments(const MomentTable& table, double x, double mu, double nu) {
  require_ordering(table, Ordering::Normal, "symplectic_tomogram_from_moments");
  const double s2 = mu * mu + nu * nu;
  if (s2 < 1e-12) {
    throw Error(ErrorCode::DegenerateDirection, "mu^2 + nu^2 = " + std::to_string(s2));
  }
  const double s = std::sqrt(s2);
  const int r = table.max_degree();
  const auto h = hermite_all(r, x / s);
  const cplx plus{mu, nu};
  cplx sum{0.0, 0.0};
  for (int n = 0; n <= r; ++n) {
    for (int m = 0; n + m <= r; ++m) {
      const cplx v = table(n, m);
      if (v == cplx{0.0, 0.0}) continue;
      const double denom = std::sqrt(std::ldexp(1.0, n + m) * std::pow(s2, n + m + 1));
      sum += v / (factorial(n) * factorial(m)) * detail::cpow(plus, n) * detail::cpow(std::conj(plus), m) *
             h[n + m] / denom;
    }
  }
  return std::exp(-x * x / s2) / std::sqrt(std::numbers::pi) * sum.real();
}

inline TomogramGrid tomogram_grid_from_moments(const MomentTable& table, int n_theta, int n_x) {
  const MomentTable normal = table.ordering() == Ordering::Normal ? table : convert_ordering(table);
  TomogramGrid grid = make_gauss_hermite_grid(n_theta, n_x);
  fill_grid(grid, [&](double theta, double x) { return tomogram_from_moments(normal, theta, x); });
  return grid;
}

inline TomogramGrid oracle_tomogram_grid(const FockState& state, int n_theta, int n_x) {
  TomogramGrid grid = make_gauss_hermite_grid(n_theta, n_x);
  fill_grid(grid, [&](double theta, double x) { return oracle_tomogram(state, theta, x); });
  return grid;
}

namespace detail {

inline void require_x_resolution(const TomogramGrid& grid, int degree, std::string_view what) {
  const bool ok = grid.quadrature == XQuadrature::GaussHermite ? grid.exact_degree() >= degree
                                                               : grid.n_x() >= degree + 1;
  if (!ok) {
    throw Error(ErrorCode::GridTooCoarse, std::string(what) + ": " + std::to_string(grid.n_x()) +
                                              " X nodes cannot resolve polynomial degree " + std::to_string(degree));
  }
}

inline void require_theta_resolution(const std::vector<double>& thetas, int max_degree, std::string_view what) {
  if (static_cast<int>(thetas.size()) < 2 * max_degree + 1) {
    throw Error(ErrorCode::GridTooCoarse, std::string(what) + ": " + std::to_string(thetas.size()) +
                                              " angles, need >= " + std::to_string(2 * max_degree + 1));
  }
  if (!angles_equispaced(thetas)) {
    throw Error(ErrorCode::GridTooCoarse, std::string(what) + ": angles must be equispaced on [0, 2pi)");
  }
}

/// Coefficients c[r] of H_n(x) = sum_r c[r] x^r.
inline std::vector<std::vector<double>> hermite_coefficients(int n_max) {
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n_max) + 1);
  c[0] = {1.0};
  if (n_max >= 1) c[1] = {0.0, 2.0};
  for (int n = 1; n < n_max; ++n) {
    std::vector<double> next(static_cast<std::size_t>(n) + 2, 0.0);
    for (int r = 0; r <= n; ++r) next[r + 1] += 2.0 * c[n][r];
    for (int r = 0; r <= n - 1; ++r) next[r] -= 2.0 * n * c[n - 1][r];
    c[n + 1] = std::move(next);
  }
  return c;
}

/// Ordered moments from per-angle Hermite averages hbar(j, d) = <H_d(X_theta_j)>.
inline MomentTable moments_from_hermite_averages(const Eigen::MatrixXd& hbar, const std::vector<double>& thetas,
                                                 Ordering ordering, int max_degree) {
  const int n_theta = static_cast<int>(thetas.size());
  MomentTable t(ordering, max_degree);
  for (int d = 1; d <= max_degree; ++d) {
    for (int i = d; i >= 0; --i) {
      const int j = d - i;
      cplx acc{0.0, 0.0};
      for (int a = 0; a < n_theta; ++a) {
        double radial = 0.0;
        if (ordering == Ordering::Normal) {
          radial = hbar(a, d);
        } else {
          for (int p = 0; p <= std::min(i, j); ++p) {
            radial += std::ldexp(1.0, p) * hbar(a, d - 2 * p) / (factorial(p) * factorial(d - 2 * p));
          }
        }
        // normal (n,m): e^{i(m-n)theta};  antinormal (k,l): e^{i(k-l)theta}
        const int freq = ordering == Ordering::Normal ? j - i : i - j;
        acc += std::polar(radial, freq * thetas[a]);
      }
      acc /= static_cast<double>(n_theta);
      const double prefactor = factorial(i) * factorial(j) / std::sqrt(std::ldexp(1.0, d));
      t(i, j) = ordering == Ordering::Normal ? prefactor / factorial(d) * acc : prefactor * acc;
    }
  }
  return t;
}

}  // namespace detail

/// Inverse relation: ordered moments from a sampled tomogram, using the
/// X quadrature of the grid and the trapezoid rule in theta.
inline MomentTable moments_from_tomogram(const TomogramGrid& grid, Ordering ordering, int max_degree) {
  detail::require_theta_resolution(grid.thetas, max_degree, "moments_from_tomogram");
  detail::require_x_resolution(grid, 2 * max_degree + 2, "moments_from_tomogram");
  Eigen::MatrixXd hbar = Eigen::MatrixXd::Zero(grid.n_theta(), max_degree + 1);
  for (int i = 0; i < grid.n_x(); ++i) {
    const auto h = hermite_all(max_degree, grid.xs[i]);
    for (int a = 0; a < grid.n_theta(); ++a) {
      const double wv = grid.x_weights[i] * grid.values(a, i);
      for (int d = 0; d <= max_degree; ++d) hbar(a, d) += wv * h[d];
    }
  }
  return detail::moments_from_hermite_averages(hbar, grid.thetas, ordering, max_degree);
}

/// Same inverse relation driven by tomographic moments <X_theta^r>
/// (H_d(X) with X^r replaced by <X_theta^r>).
inline MomentTable moments_from_tomographic_moments(const TomographicMoments& tm, Ordering ordering, int max_degree) {
  detail::require_theta_resolution(tm.thetas, max_degree, "moments_from_tomographic_moments");
  if (tm.max_order < max_degree) {
    throw Error(ErrorCode::InsufficientDegree, "tomographic moments of order " + std::to_string(tm.max_order) +
                                                   " cannot give degree " + std::to_string(max_degree));
  }
  const auto coeffs = detail::hermite_coefficients(max_degree);
  const int n_theta = static_cast<int>(tm.thetas.size());
  Eigen::MatrixXd hbar = Eigen::MatrixXd::Zero(n_theta, max_degree + 1);
  for (int a = 0; a < n_theta; ++a) {
    for (int d = 0; d <= max_degree; ++d) {
      for (int r = 0; r <= d; ++r) hbar(a, d) += coeffs[d][r] * tm.values(a, r);
    }
  }
  return detail::moments_from_hermite_averages(hbar, tm.thetas, ordering, max_degree);
}

/// <X_theta^r> = int X^r w(X, theta) dX per grid row.
inline TomographicMoments tomographic_moments_from_grid(const TomogramGrid& grid, int max_order) {
  detail::require_x_resolution(grid, 2 * max_order + 2, "tomographic_moments_from_grid");
  TomographicMoments tm;
  tm.max_order = max_order;
  tm.thetas = grid.thetas;
  tm.values = Eigen::MatrixXd::Zero(grid.n_theta(), max_order + 1);
  for (int a = 0; a < grid.n_theta(); ++a) {
    for (int i = 0; i < grid.n_x(); ++i) {
      const double wv = grid.x_weights[i] * grid.values(a, i);
      double xr = 1.0;
      for (int r = 0; r <= max_order; ++r, xr *= grid.xs[i]) tm.values(a, r) += wv * xr;
    }
  }
  return tm;
}

/// <X_theta^r> = sum_{n+m <= r, r-n-m even} r! sqrt(2^{n+m-2r}) / (n! m! ((r-n-m)/2)!)
///               <(a^dag)^n a^m> e^{i(n-m)theta}
inline std::vector<double> tomographic_moments_from_normal_moments(const MomentTable& table, double theta,
                                                                   int max_order) {
  require_ordering(table, Ordering::Normal, "tomographic_moments_from_normal_moments");
  require_degree(table, max_order, "tomographic_moments_from_normal_moments");
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (int r = 0; r <= max_order; ++r) {
    cplx sum{0.0, 0.0};
    for (int n = 0; n <= r; ++n) {
      for (int m = 0; n + m <= r; ++m) {
        if ((r - n - m) % 2 != 0) continue;
        const double coeff = factorial(r) * std::sqrt(std::ldexp(1.0, n + m - 2 * r)) /
                             (factorial(n) * factorial(m) * factorial((r - n - m) / 2));
        sum += coeff * table(n, m) * std::polar(1.0, (n - m) * theta);
      }
    }
    out[r] = sum.real();
  }
  return out;
}

inline TomographicMoments tomographic_moments_from_normal_moments(const MomentTable& table,
                                                                  const std::vector<double>& thetas, int max_order) {
  TomographicMoments tm;
  tm.max_order = max_order;
  tm.thetas = thetas;
  tm.values.resize(static_cast<Eigen::Index>(thetas.size()), max_order + 1);
  for (std::size_t a = 0; a < thetas.size(); ++a) {
    const auto row = tomographic_moments_from_normal_moments(table, thetas[a], max_order);
    for (int r = 0; r <= max_order; ++r) tm.values(static_cast<Eigen::Index>(a), r) = row[r];
  }
  return tm;
}

}  // namespace qmoment

#endif  // QMOMENT_TOMOGRAPHY_HPP
