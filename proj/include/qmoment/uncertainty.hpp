#ifndef QMOMENT_UNCERTAINTY_HPP
#define QMOMENT_UNCERTAINTY_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmoment/error.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/moments.hpp"
#include "qmoment/tomography.hpp"

namespace qmoment {

struct Verdict {
  bool pass = true;
  /// 1-based index of the first violated quantity (leading minor for the
  /// moment-matrix test), or 0 when the violation is not attributable to one.
  int first_violated = 0;
  double value = 0.0;
};

inline constexpr double kVerdictTolerance = 1e-9;

/// (<a^dag a> - |<a>|^2) + (<a^dag a> - |<a>|^2)^2 - |<a^2> - <a>^2|^2
/// written with the uncentred normally ordered moments; >= 0 for physical states.
inline double ur_simple(const MomentTable& t) {
  require_ordering(t, Ordering::Normal, "ur_simple");
  require_degree(t, 2, "ur_simple");
  const cplx a = t(0, 1);
  const cplx ad = t(1, 0);
  const double centred_n = (t(1, 1) - ad * a).real();
  const cplx centred_ad2 = t(2, 0) - ad * ad;
  const cplx centred_a2 = t(0, 2) - a * a;
  return centred_n + centred_n * centred_n - (centred_ad2 * centred_a2).real();
}

inline Verdict ur_simple_verdict(double lhs) {
  return lhs >= -kVerdictTolerance ? Verdict{true, 0, lhs} : Verdict{false, 1, lhs};
}

namespace detail {

inline int find_angle(const std::vector<double>& thetas, double target) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t a = 0; a < thetas.size(); ++a) {
    double diff = std::fmod(thetas[a] - target, two_pi);
    if (diff < 0) diff += two_pi;
    if (diff < 1e-9 || two_pi - diff < 1e-9) return static_cast<int>(a);
  }
  return -1;
}

}  // namespace detail

/// Var(X_theta) Var(X_{theta+pi/2}) - [Var(X_{theta+pi/4}) - (Var(X_theta) + Var(X_{theta+pi/2}))/2]^2 - 1/4
inline double ur_tomographic(const TomographicMoments& m, double theta) {
  if (m.max_order < 2) throw Error(ErrorCode::InsufficientDegree, "ur_tomographic needs second moments");
  double var[3];
  const double offsets[3] = {0.0, std::numbers::pi / 2.0, std::numbers::pi / 4.0};
  for (int s = 0; s < 3; ++s) {
    const int a = detail::find_angle(m.thetas, theta + offsets[s]);
    if (a < 0) {
      throw Error(ErrorCode::MissingAngles, "no tomographic moments at theta = " + std::to_string(theta + offsets[s]));
    }
    var[s] = m.values(a, 2) - m.values(a, 1) * m.values(a, 1);
  }
  const double cross = var[2] - 0.5 * (var[0] + var[1]);
  return var[0] * var[1] - cross * cross - 0.25;
}

/// (4 + sqrt(16 + 9 p^2)) / (9 p), accurate to about 1%.
inline double purity_phi(double purity_value) {
  if (!(purity_value >= 1e-3)) {
    throw Error(ErrorCode::OutOfDomain, "purity " + std::to_string(purity_value) + " is below 1e-3");
  }
  return (4.0 + std::sqrt(16.0 + 9.0 * purity_value * purity_value)) / (9.0 * purity_value);
}

struct PurityBoundResult {
  double lhs = 0.0;
  double bound = 0.0;
  double purity = 0.0;
  Verdict verdict;
};

/// Purity-strengthened relation: ur_simple(t) >= (Phi^2(purity) - 1) / 4.
inline PurityBoundResult ur_purity_dependent(const MomentTable& t) {
  const auto p = purity(t);
  if (!p.converged) {
    const double tail = p.partial_sums.size() >= 3
                            ? std::abs(p.partial_sums.back() - p.partial_sums[p.partial_sums.size() - 3])
                            : std::abs(p.value);
    throw Error(ErrorCode::PurityNotConverged,
                "purity series at degree " + std::to_string(t.max_degree()) + " has tail " + std::to_string(tail));
  }
  const double phi = purity_phi(p.value);
  PurityBoundResult r;
  r.lhs = ur_simple(t);
  r.bound = (phi * phi - 1.0) / 4.0;
  r.purity = p.value;
  r.verdict = r.lhs >= r.bound - 1e-6 ? Verdict{true, 0, r.lhs - r.bound} : Verdict{false, 1, r.lhs - r.bound};
  return r;
}

struct PsdResult {
  int order = 0;
  /// G(i,j) = <B_i^dag B_j> over B = 1, a, a^dag, a^2, (a^dag)^2, ...
  Eigen::MatrixXcd gram;
  /// Leading principal minors, minors[k-1] of the top-left k x k block.
  std::vector<double> minors;
  std::vector<double> eigenvalues;
  Verdict verdict;
};

/// Gram matrix of {1, a, a^dag, ..., a^order, (a^dag)^order}. Entries with the
/// creation operators on the left read the normal table, those with them on
/// the right the antinormal one; whichever is not supplied comes from the
/// ordering conversion.
inline Eigen::MatrixXcd moment_gram_matrix(const MomentTable& t, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidParameter, "moment matrix order must be >= 1");
  require_degree(t, 2 * order, "moment_matrix_psd");
  const MomentTable converted = convert_ordering(t);
  const MomentTable& normal = t.ordering() == Ordering::Normal ? t : converted;
  const MomentTable& antinormal = t.ordering() == Ordering::Antinormal ? t : converted;

  // basis element b: power p, creation flag
  struct Element {
    int power;
    bool creation;
  };
  std::vector<Element> basis{{0, false}};
  for (int p = 1; p <= order; ++p) {
    basis.push_back({p, false});
    basis.push_back({p, true});
  }
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto [p, ci] = basis[i];
      const auto [q, cj] = basis[j];
      if (!ci && !cj) {
        g(i, j) = normal(p, q);  // (a^dag)^p a^q
      } else if (!ci && cj) {
        g(i, j) = normal(p + q, 0);  // (a^dag)^{p+q}
      } else if (ci && !cj) {
        g(i, j) = normal(0, p + q);  // a^{p+q}
      } else {
        g(i, j) = antinormal(p, q);  // a^p (a^dag)^q
      }
    }
  }
  return g;
}

/// Positivity of the moment matrix. The verdict uses the smallest eigenvalue
/// against -1e-8 * ||G||; minors are reported alongside.
inline PsdResult moment_matrix_psd(const MomentTable& t, int order) {
  PsdResult r;
  r.order = order;
  r.gram = moment_gram_matrix(t, order);
  const Eigen::MatrixXcd herm = 0.5 * (r.gram + r.gram.adjoint());
  for (Eigen::Index k = 1; k <= herm.rows(); ++k) r.minors.push_back(herm.topLeftCorner(k, k).determinant().real());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) r.eigenvalues.push_back(solver.eigenvalues()(k));
  const double scale = herm.norm();
  const double min_eig = r.eigenvalues.front();
  r.verdict.pass = min_eig >= -1e-8 * scale;
  r.verdict.value = min_eig;
  if (!r.verdict.pass) {
    for (std::size_t k = 0; k < r.minors.size(); ++k) {
      if (r.minors[k] < -kVerdictTolerance) {
        r.verdict.first_violated = static_cast<int>(k) + 1;
        r.verdict.value = r.minors[k];
        break;
      }
    }
  }
  return r;
}

struct UncertaintyReport {
  double simple_lhs = 0.0;
  Verdict simple;
  std::optional<PurityBoundResult> purity_relation;
  /// Set when the purity relation could not be evaluated.
  std::optional<std::string> purity_error;
  PsdResult psd;
};

inline UncertaintyReport uncertainty_report(const MomentTable& t, int order) {
  const MomentTable normal = t.ordering() == Ordering::Normal ? t : convert_ordering(t);
  UncertaintyReport report;
  report.simple_lhs = ur_simple(normal);
  report.simple = ur_simple_verdict(report.simple_lhs);
  try {
    report.purity_relation = ur_purity_dependent(normal);
  } catch (const Error& e) {
    report.purity_error = std::string(to_string(e.code())) + ": " + e.context();
  }
  report.psd = moment_matrix_psd(t, order);
  return report;
}

}  // namespace qmoment

#endif  // QMOMENT_UNCERTAINTY_HPP
