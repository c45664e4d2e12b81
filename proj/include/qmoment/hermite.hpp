#ifndef QMOMENT_HERMITE_HPP
#define QMOMENT_HERMITE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qmoment/combinatorics.hpp"
#include "qmoment/error.hpp"

namespace qmoment {

/// Physicists' Hermite polynomial H_N(x) by three-term recurrence.
inline double hermite(int n, double x) {
  if (n < 0) return 0.0;
  double h_prev = 1.0;
  if (n == 0) return h_prev;
  double h = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * h - 2.0 * k * h_prev;
    h_prev = h;
    h = next;
  }
  return h;
}

/// H_0(x) ... H_{n_max}(x).
inline std::vector<double> hermite_all(int n_max, double x) {
  std::vector<double> h(static_cast<std::size_t>(n_max) + 1);
  h[0] = 1.0;
  if (n_max >= 1) h[1] = 2.0 * x;
  for (int k = 1; k < n_max; ++k) h[k + 1] = 2.0 * x * h[k] - 2.0 * k * h[k - 1];
  return h;
}

/// Number-basis quadrature wavefunctions psi_0(x) ... psi_{n_max}(x),
/// i.e. normalized Hermite functions with psi_0 = pi^{-1/4} e^{-x^2/2}.
/// The recurrence is normalized at every step, so no factorials appear.
inline std::vector<double> hermite_functions(int n_max, double x) {
  std::vector<double> psi(static_cast<std::size_t>(n_max) + 1);
  psi[0] = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(std::numbers::pi));
  if (n_max >= 1) psi[1] = std::sqrt(2.0) * x * psi[0];
  for (int k = 1; k < n_max; ++k) {
    psi[k + 1] = std::sqrt(2.0 / (k + 1)) * x * psi[k] - std::sqrt(static_cast<double>(k) / (k + 1)) * psi[k - 1];
  }
  return psi;
}

/// Integral of x^r H_N(x) e^{-x^2} over the real line.
inline double hermite_moment_integral(int r, int n) {
  if (r < 0 || n < 0 || n > r || (r - n) % 2 != 0) return 0.0;
  const int half = (r - n) / 2;
  return std::sqrt(std::numbers::pi) * factorial(r) / (std::ldexp(1.0, r - n) * factorial(half));
}

/// Gauss-Hermite rule for the weight e^{-x^2}.
///
/// `scaled_weights[i] = weights[i] * exp(x_i^2)` integrates a plain
/// function f: sum_i scaled_weights[i] f(x_i) ~ int f(x) dx, exactly when
/// f(x) e^{x^2} is a polynomial of degree < 2n.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> scaled_weights;

  int size() const { return static_cast<int>(nodes.size()); }
  /// Highest polynomial degree integrated exactly against e^{-x^2}.
  int exact_degree() const { return 2 * size() - 1; }
};

/// Golub-Welsch initial nodes refined by Newton on the normalized
/// Hermite function psi_n; weights from w_i e^{x_i^2} = 1 / (n psi_{n-1}(x_i)^2),
/// which keeps full relative accuracy in the tails.
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "Gauss-Hermite rule needs n >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.scaled_weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = solver.eigenvalues()(i);
    for (int iter = 0; iter < 8; ++iter) {
      const auto psi = hermite_functions(n, x);
      // psi_n' = sqrt(2n) psi_{n-1} - x psi_n
      const double deriv = std::sqrt(2.0 * n) * psi[n - 1] - x * psi[n];
      const double step = psi[n] / deriv;
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const auto psi = hermite_functions(n - 1, x);
    const double scaled = 1.0 / (n * psi[n - 1] * psi[n - 1]);
    rule.nodes[i] = x;
    rule.scaled_weights[i] = scaled;
    rule.weights[i] = scaled * std::exp(-x * x);
  }
  return rule;
}

}  // namespace qmoment

#endif  // QMOMENT_HERMITE_HPP
