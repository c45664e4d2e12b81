#ifndef QMOMENT_MOMENTS_HPP
#define QMOMENT_MOMENTS_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "qmoment/combinatorics.hpp"
#include "qmoment/error.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/state_spec.hpp"

namespace qmoment {

namespace detail {

inline cplx cpow(cplx z, int n) {
  cplx r{1.0, 0.0};
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

// sum_p C(k,p) C(l,p) p! alpha^{k-p} conj(alpha)^{l-p} * bracket(p)
template <class Bracket>
cplx antinormal_coherent_sum(cplx alpha, int k, int l, Bracket bracket) {
  cplx sum{0.0, 0.0};
  for (int p = 0; p <= std::min(k, l); ++p) {
    sum += binomial(k, p) * binomial(l, p) * factorial(p) * cpow(alpha, k - p) *
           cpow(std::conj(alpha), l - p) * bracket(p);
  }
  return sum;
}

}  // namespace detail

/// Closed-form ordered moments of the catalogue states.
inline MomentTable closed_form_moments(const StateSpec& spec, Ordering ordering, int max_degree) {
  validate(spec);
  MomentTable t(ordering, max_degree);
  const bool normal = ordering == Ordering::Normal;

  for (int d = 0; d <= max_degree; ++d) {
    for (int i = d; i >= 0; --i) {
      const int j = d - i;
      t(i, j) = std::visit(
          overloaded{
              [&](const states::Fock& s) -> cplx {
                if (i != j) return 0.0;
                return normal ? falling_factorial(s.n, i) : falling_factorial(s.n + i, i);
              },
              [&](const states::Thermal& s) -> cplx {
                if (i != j) return 0.0;
                // n! / (e^{1/T} - 1)^n   and   k! / (1 - e^{-1/T})^k
                const double base = normal ? std::expm1(1.0 / s.temperature) : -std::expm1(-1.0 / s.temperature);
                return factorial(i) / std::pow(base, i);
              },
              [&](const states::Coherent& s) -> cplx {
                if (normal) return detail::cpow(std::conj(s.alpha), i) * detail::cpow(s.alpha, j);
                return detail::antinormal_coherent_sum(s.alpha, i, j, [](int) { return 1.0; });
              },
              [&](const states::EvenCoherent& s) -> cplx {
                const double e = std::exp(-2.0 * std::norm(s.alpha));
                const double norm2 = 1.0 / (2.0 * (1.0 + e));
                if (normal) {
                  const double bracket = 1.0 + sign_power(i + j) + e * (sign_power(i) + sign_power(j));
                  return norm2 * bracket * detail::cpow(std::conj(s.alpha), i) * detail::cpow(s.alpha, j);
                }
                return norm2 * detail::antinormal_coherent_sum(s.alpha, i, j, [&](int p) {
                         return 1.0 + sign_power(i + j - 2 * p) + e * (sign_power(i - p) + sign_power(j - p));
                       });
              },
              [&](const states::OddCoherent& s) -> cplx {
                const double e = std::exp(-2.0 * std::norm(s.alpha));
                const double norm2 = 1.0 / (-2.0 * std::expm1(-2.0 * std::norm(s.alpha)));
                if (normal) {
                  const double bracket = 1.0 + sign_power(i + j) - e * (sign_power(i) + sign_power(j));
                  return norm2 * bracket * detail::cpow(std::conj(s.alpha), i) * detail::cpow(s.alpha, j);
                }
                return norm2 * detail::antinormal_coherent_sum(s.alpha, i, j, [&](int p) {
                         return 1.0 + sign_power(i + j - 2 * p) - e * (sign_power(i - p) + sign_power(j - p));
                       });
              },
          },
          spec);
    }
  }
  t(0, 0) = 1.0;
  return t;
}

/// Normal <-> antinormal conversion.
///   <a^k (a^dag)^l>   = sum_p C(k,p) C(l,p) p! <(a^dag)^{l-p} a^{k-p}>
///   <(a^dag)^n a^m>   = sum_p (-1)^p C(n,p) C(m,p) p! <a^{m-p} (a^dag)^{n-p}>
/// Entry (i, j) of the output draws from entries (j-p, i-p) of the input.
inline MomentTable convert_ordering(const MomentTable& table) {
  const bool to_antinormal = table.ordering() == Ordering::Normal;
  MomentTable out(opposite(table.ordering()), table.max_degree());
  for (int d = 0; d <= table.max_degree(); ++d) {
    for (int i = d; i >= 0; --i) {
      const int j = d - i;
      cplx sum{0.0, 0.0};
      for (int p = 0; p <= std::min(i, j); ++p) {
        const double sign = to_antinormal ? 1.0 : sign_power(p);
        sum += sign * binomial(i, p) * binomial(j, p) * factorial(p) * table(j - p, i - p);
      }
      out(i, j) = sum;
    }
  }
  return out;
}

struct SeriesResult {
  double value = 0.0;
  /// partial_sums[d]: sum restricted to entries of degree <= d in both tables.
  std::vector<double> partial_sums;
  bool converged = false;
};

/// Tr[rho1 rho2] = sum (-1)^{m+k} (n+k)! / (n! m! k! l!) delta_{n+k,m+l}
///                 <(a^dag)^n a^m>_1 <(a^dag)^k a^l>_2
/// over all stored degrees. `converged` when the last two degree shells
/// together contribute less than `tolerance`.
inline SeriesResult overlap(const MomentTable& t1, const MomentTable& t2, double tolerance = 1e-9) {
  require_ordering(t1, Ordering::Normal, "overlap");
  require_ordering(t2, Ordering::Normal, "overlap");
  if (t1.max_degree() != t2.max_degree()) {
    throw Error(ErrorCode::DimensionMismatch, "overlap needs tables of equal degree");
  }
  const int r = t1.max_degree();
  std::vector<cplx> shell(static_cast<std::size_t>(r) + 1, cplx{0.0, 0.0});
  for (int n = 0; n <= r; ++n) {
    for (int m = 0; n + m <= r; ++m) {
      const cplx first = t1(n, m);
      if (first == cplx{0.0, 0.0}) continue;
      for (int k = 0; k <= r; ++k) {
        const int l = n + k - m;
        if (l < 0 || k + l > r) continue;
        const double coeff = sign_power(m + k) *
                             std::exp(log_factorial(n + k) - log_factorial(n) - log_factorial(m) -
                                      log_factorial(k) - log_factorial(l));
        shell[std::max(n + m, k + l)] += coeff * first * t2(k, l);
      }
    }
  }
  SeriesResult result;
  double running = 0.0;
  for (const cplx& s : shell) {
    running += s.real();
    result.partial_sums.push_back(running);
  }
  result.value = running;
  double tail = std::abs(shell[r]);
  if (r >= 1) tail += std::abs(shell[r - 1]);
  result.converged = tail < tolerance;
  return result;
}

/// Tr[rho^2] from normally ordered moments.
inline SeriesResult purity(const MomentTable& t, double tolerance = 1e-9) { return overlap(t, t, tolerance); }

/// <0|rho|0> = sum_k (-1)^k <(a^dag)^k a^k> / k!
inline double vacuum_fidelity(const MomentTable& t) {
  require_ordering(t, Ordering::Normal, "vacuum_fidelity");
  double sum = 0.0;
  for (int k = 0; 2 * k <= t.max_degree(); ++k) sum += sign_power(k) * t(k, k).real() / factorial(k);
  return sum;
}

/// Inverse of purity = tanh(1/2T).
inline double effective_temperature(double purity_value) {
  if (!(purity_value > 0.0 && purity_value < 1.0)) {
    throw Error(ErrorCode::OutOfDomain,
                "effective temperature needs 0 < purity < 1, got " + std::to_string(purity_value));
  }
  return 1.0 / (2.0 * std::atanh(purity_value));
}

}  // namespace qmoment

#endif  // QMOMENT_MOMENTS_HPP
