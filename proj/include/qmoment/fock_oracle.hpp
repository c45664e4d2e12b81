#ifndef QMOMENT_FOCK_ORACLE_HPP
#define QMOMENT_FOCK_ORACLE_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmoment/combinatorics.hpp"
#include "qmoment/error.hpp"
#include "qmoment/hermite.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/state_spec.hpp"

namespace qmoment {

/// Truncated density matrix in the number basis |0> ... |cutoff>.
/// Conventions: hbar = 1, alpha = (q + i p) / sqrt(2),
/// X_theta = q cos(theta) + p sin(theta).
class FockState {
 public:
  /// Validates trace, Hermiticity and positivity of `rho`.
  explicit FockState(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
    if (rho_.rows() < 2 || rho_.rows() != rho_.cols()) {
      throw Error(ErrorCode::InvalidParameter, "density matrix must be square with cutoff >= 1");
    }
    const double trace_defect = std::abs(rho_.trace() - cplx{1.0, 0.0});
    if (trace_defect > 1e-12) {
      throw Error(ErrorCode::InvalidParameter, "trace(rho) differs from 1 by " + std::to_string(trace_defect));
    }
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(ErrorCode::InvalidParameter, "rho is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho_, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-10) {
      throw Error(ErrorCode::InvalidParameter, "rho has a negative eigenvalue " +
                                                   std::to_string(solver.eigenvalues().minCoeff()));
    }
  }

  int cutoff() const noexcept { return static_cast<int>(rho_.rows()) - 1; }
  const Eigen::MatrixXcd& rho() const noexcept { return rho_; }

  /// Highest level whose population exceeds `threshold`.
  int top_populated_level(double threshold = 1e-12) const {
    for (int j = cutoff(); j >= 0; --j) {
      if (rho_(j, j).real() > threshold) return j;
    }
    return 0;
  }

 private:
  Eigen::MatrixXcd rho_;
};

namespace detail {

inline Eigen::VectorXcd coherent_amplitudes(cplx alpha, int cutoff) {
  Eigen::VectorXcd c(cutoff + 1);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < cutoff; ++n) c(n + 1) = c(n) * alpha / std::sqrt(n + 1.0);
  return c;
}

inline void require_captured_norm(double norm, const StateSpec& spec, int cutoff) {
  if (norm < 1.0 - 1e-10) {
    throw Error(ErrorCode::CutoffTooSmall, to_string(spec) + " at cutoff " + std::to_string(cutoff) +
                                               " captures norm " + std::to_string(norm));
  }
}

inline Eigen::MatrixXcd pure_projector(Eigen::VectorXcd c, const StateSpec& spec, int cutoff) {
  const double norm = c.squaredNorm();
  require_captured_norm(norm, spec, cutoff);
  c /= std::sqrt(norm);
  return c * c.adjoint();
}

}  // namespace detail

/// Fock-basis density matrix of a catalogue state.
inline FockState realize(const StateSpec& spec, int cutoff) {
  validate(spec);
  if (cutoff < 1) throw Error(ErrorCode::InvalidParameter, "cutoff must be >= 1");
  const int dim = cutoff + 1;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  std::visit(overloaded{
                 [&](const states::Fock& s) {
                   if (s.n > cutoff) {
                     throw Error(ErrorCode::CutoffTooSmall, "Fock level " + std::to_string(s.n) +
                                                                " exceeds cutoff " + std::to_string(cutoff));
                   }
                   rho(s.n, s.n) = 1.0;
                 },
                 [&](const states::Coherent& s) {
                   rho = detail::pure_projector(detail::coherent_amplitudes(s.alpha, cutoff), spec, cutoff);
                 },
                 [&](const states::Thermal& s) {
                   const double q = std::exp(-1.0 / s.temperature);
                   const double captured = -std::expm1(static_cast<double>(dim) * std::log(q));
                   detail::require_captured_norm(captured, spec, cutoff);
                   double p = -std::expm1(-1.0 / s.temperature);
                   for (int n = 0; n < dim; ++n, p *= q) rho(n, n) = p / captured;
                 },
                 [&](const states::EvenCoherent& s) {
                   Eigen::VectorXcd c = detail::coherent_amplitudes(s.alpha, cutoff);
                   const double norm2 = 1.0 / (2.0 * (1.0 + std::exp(-2.0 * std::norm(s.alpha))));
                   for (int n = 0; n < dim; ++n) c(n) *= (n % 2 == 0 ? 2.0 : 0.0) * std::sqrt(norm2);
                   rho = detail::pure_projector(c, spec, cutoff);
                 },
                 [&](const states::OddCoherent& s) {
                   Eigen::VectorXcd c = detail::coherent_amplitudes(s.alpha, cutoff);
                   const double norm2 = 1.0 / (-2.0 * std::expm1(-2.0 * std::norm(s.alpha)));
                   for (int n = 0; n < dim; ++n) c(n) *= (n % 2 == 1 ? 2.0 : 0.0) * std::sqrt(norm2);
                   rho = detail::pure_projector(c, spec, cutoff);
                 },
             },
             spec);
  return FockState(std::move(rho));
}

/// Smallest cutoff for which moments up to degree R of `spec` are
/// reproduced by the truncated state far below 1e-12.
inline int suggested_cutoff(const StateSpec& spec, int max_degree) {
  validate(spec);
  const auto population = [&](int n) -> double {
    return std::visit(overloaded{
                          [&](const states::Fock& s) { return n == s.n ? 1.0 : 0.0; },
                          [&](const states::Thermal& s) {
                            return -std::expm1(-1.0 / s.temperature) * std::exp(-n / s.temperature);
                          },
                          [&](const auto& s) {
                            // Poisson envelope bounds coherent and cat populations up to a factor 2N^2.
                            const double x = std::norm(s.alpha);
                            return 4.0 * std::exp(n * std::log(std::max(x, 1e-300)) - x - log_factorial(n));
                          },
                      },
                      spec);
  };
  int top = 0;
  if (const auto* f = std::get_if<states::Fock>(&spec)) top = f->n;
  for (int n = 0; n < 4000; ++n) {
    if (std::holds_alternative<states::Fock>(spec)) break;
    const double weight = population(n) * std::pow(n + max_degree + 1.0, max_degree);
    if (n > 2 && weight < 1e-18 && population(n) < 1e-16) {
      top = n;
      break;
    }
  }
  return std::max(top + max_degree + 2, 8);
}

namespace detail {

/// Truncated annihilation operator on `dim` levels.
inline Eigen::MatrixXcd lowering(int dim) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  for (int j = 1; j < dim; ++j) a(j - 1, j) = std::sqrt(static_cast<double>(j));
  return a;
}

}  // namespace detail

/// Ordered moments by direct trace Tr[rho M], where M is a product of
/// ladder-operator matrices. The state is zero-padded by R levels so the
/// products act on it without clipping; CutoffTooSmall is raised when an
/// unpadded evaluation would have pushed populated levels past the cutoff.
inline MomentTable oracle_moments(const FockState& state, Ordering ordering, int max_degree) {
  if (max_degree < 0) throw Error(ErrorCode::InvalidParameter, "max_degree must be >= 0");
  const int top = state.top_populated_level();
  if (top + max_degree > state.cutoff()) {
    throw Error(ErrorCode::CutoffTooSmall,
                "populated level " + std::to_string(top) + " + degree " + std::to_string(max_degree) +
                    " exceeds cutoff " + std::to_string(state.cutoff()));
  }
  const int dim = state.cutoff() + 1 + max_degree;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  rho.topLeftCorner(state.cutoff() + 1, state.cutoff() + 1) = state.rho();

  const Eigen::MatrixXcd a = detail::lowering(dim);
  std::vector<Eigen::MatrixXcd> powers{Eigen::MatrixXcd::Identity(dim, dim)};
  for (int p = 1; p <= max_degree; ++p) powers.push_back(powers.back() * a);

  MomentTable table(ordering, max_degree);
  for (int d = 0; d <= max_degree; ++d) {
    for (int i = d; i >= 0; --i) {
      const int j = d - i;
      const Eigen::MatrixXcd op = ordering == Ordering::Normal
                                      ? Eigen::MatrixXcd(powers[i].adjoint() * powers[j])
                                      : Eigen::MatrixXcd(powers[i] * powers[j].adjoint());
      table(i, j) = (rho * op).trace();
    }
  }
  table(0, 0) = 1.0;
  return table;
}

/// w(X, theta) = <X_theta| rho |X_theta> with |X_theta> = e^{i theta N}|X>.
inline double oracle_tomogram(const FockState& state, double theta, double x) {
  const auto psi = hermite_functions(state.cutoff(), x);
  Eigen::VectorXcd u(state.cutoff() + 1);
  for (int n = 0; n <= state.cutoff(); ++n) u(n) = std::polar(psi[n], n * theta);
  return (u.adjoint() * state.rho() * u)(0, 0).real();
}

/// Q = <alpha|rho|alpha> / pi with alpha = (q + i p)/sqrt(2); a density
/// with respect to d^2 alpha = dq dp / 2.
inline double oracle_husimi(const FockState& state, double q, double p) {
  const cplx alpha{q / std::numbers::sqrt2, p / std::numbers::sqrt2};
  const Eigen::VectorXcd v = detail::coherent_amplitudes(alpha, state.cutoff());
  return (v.adjoint() * state.rho() * v)(0, 0).real() / std::numbers::pi;
}

/// Husimi evaluation specialised for repeated calls: eigen-decomposes rho
/// once, then evaluates each retained eigenvector overlap by Horner's rule.
class HusimiEvaluator {
 public:
  explicit HusimiEvaluator(const FockState& state) {
    const Eigen::MatrixXcd& rho = state.rho();
    const int dim = static_cast<int>(rho.rows());
    const bool diagonal = (rho - Eigen::MatrixXcd(rho.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    if (diagonal) {
      populations_.resize(dim);
      for (int n = 0; n < dim; ++n) populations_[n] = rho(n, n).real() / factorial(n);
      while (populations_.size() > 1 && populations_.back() == 0.0) populations_.pop_back();
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho);
    for (int k = 0; k < dim; ++k) {
      const double lambda = solver.eigenvalues()(k);
      if (lambda < 1e-14) continue;
      std::vector<cplx> coeffs(dim);
      for (int n = 0; n < dim; ++n) coeffs[n] = solver.eigenvectors()(n, k) / std::sqrt(factorial(n));
      while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-300) coeffs.pop_back();
      eigenvalues_.push_back(lambda);
      polynomials_.push_back(std::move(coeffs));
    }
  }

  double operator()(double q, double p) const {
    const cplx alpha_conj{q / std::numbers::sqrt2, -p / std::numbers::sqrt2};
    const double r2 = std::norm(alpha_conj);
    double total = 0.0;
    if (!populations_.empty()) {
      for (auto it = populations_.rbegin(); it != populations_.rend(); ++it) total = total * r2 + *it;
    } else {
      for (std::size_t k = 0; k < polynomials_.size(); ++k) {
        cplx acc{0.0, 0.0};
        const auto& c = polynomials_[k];
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * alpha_conj + *it;
        total += eigenvalues_[k] * std::norm(acc);
      }
    }
    return std::exp(-r2) * total / std::numbers::pi;
  }

 private:
  std::vector<double> populations_;
  std::vector<double> eigenvalues_;
  std::vector<std::vector<cplx>> polynomials_;
};

}  // namespace qmoment

#endif  // QMOMENT_FOCK_ORACLE_HPP
