#ifndef QMOMENT_EVOLUTION_HPP
#define QMOMENT_EVOLUTION_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qmoment/error.hpp"
#include "qmoment/moment_table.hpp"

namespace qmoment {

/// Correspondence-rule shift on the moment lattice: contributes
/// coefficient(n, m) * entry(n + di, m + dj) to row (n, m); zero when the
/// shifted index leaves the lattice.
struct ShiftOp {
  int di = 0;
  int dj = 0;
  std::function<cplx(int, int)> coefficient;
};

/// Applies a sum of shift operators to every entry whose shifted indices stay
/// inside the table; entries that would need higher degrees are left zero.
inline MomentTable apply_shifts(const std::vector<ShiftOp>& ops, const MomentTable& t) {
  MomentTable out(t.ordering(), t.max_degree());
  for (int d = 0; d <= t.max_degree(); ++d) {
    for (int n = d; n >= 0; --n) {
      const int m = d - n;
      cplx sum{0.0, 0.0};
      for (const auto& op : ops) sum += op.coefficient(n, m) * t.value_or_zero(n + op.di, m + op.dj);
      out(n, m) = sum;
    }
  }
  return out;
}

enum class GeneratorKind { HarmonicNormal, HarmonicAntinormal, DampedNormal };

/// Linear generator d/dt x = M x on the flattened moment lattice (same
/// order as MomentTable storage).
struct EvolutionGenerator {
  GeneratorKind kind = GeneratorKind::HarmonicNormal;
  int max_degree = 0;
  double gamma = 0.0;
  double omega = 1.0;
  Eigen::MatrixXcd matrix;

  Ordering ordering() const {
    return kind == GeneratorKind::HarmonicAntinormal ? Ordering::Antinormal : Ordering::Normal;
  }
  bool diagonal() const { return kind != GeneratorKind::DampedNormal; }
};

/// Shift operators of the damped row
///   d/dt <(a^dag)^n a^m> = i(n-m)<.> - gamma[(n+m)<.> - n D(-1,+1) - m D(+1,-1)
///       - (1/omega - 1) n m D(-1,-1) - (1 + i gamma/omega) n(n-1)/2 D(-2,0)
///       - (1 - i gamma/omega) m(m-1)/2 D(0,-2)]
inline std::vector<ShiftOp> damped_shifts(double gamma) {
  const double omega = std::sqrt(1.0 - gamma * gamma);
  const cplx i{0.0, 1.0};
  return {
      {0, 0, [=](int n, int m) { return i * double(n - m) - gamma * double(n + m); }},
      {-1, 1, [=](int n, int) { return cplx(gamma * n); }},
      {1, -1, [=](int, int m) { return cplx(gamma * m); }},
      {-1, -1, [=](int n, int m) { return cplx(gamma * (1.0 / omega - 1.0) * n * m); }},
      {-2, 0, [=](int n, int) { return gamma * 0.5 * (1.0 + i * gamma / omega) * double(n * (n - 1)); }},
      {0, -2, [=](int, int m) { return gamma * 0.5 * (1.0 - i * gamma / omega) * double(m * (m - 1)); }},
  };
}

inline EvolutionGenerator build_generator(GeneratorKind kind, int max_degree, double gamma = 0.0) {
  if (max_degree < 0) throw Error(ErrorCode::InvalidParameter, "generator degree must be >= 0");
  EvolutionGenerator gen;
  gen.kind = kind;
  gen.max_degree = max_degree;
  const int size = MomentTable::lattice_size(max_degree);
  gen.matrix = Eigen::MatrixXcd::Zero(size, size);
  const cplx i{0.0, 1.0};

  std::vector<ShiftOp> ops;
  switch (kind) {
    case GeneratorKind::HarmonicNormal:
      ops = {{0, 0, [=](int n, int m) { return i * double(n - m); }}};
      break;
    case GeneratorKind::HarmonicAntinormal:
      ops = {{0, 0, [=](int k, int l) { return -i * double(k - l); }}};
      break;
    case GeneratorKind::DampedNormal:
      if (!(gamma > 0.0 && gamma < 1.0)) {
        throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0, 1), got " + std::to_string(gamma));
      }
      gen.gamma = gamma;
      gen.omega = std::sqrt(1.0 - gamma * gamma);
      ops = damped_shifts(gamma);
      break;
  }
  for (int d = 0; d <= max_degree; ++d) {
    for (int n = d; n >= 0; --n) {
      const int m = d - n;
      for (const auto& op : ops) {
        const int sn = n + op.di;
        const int sm = m + op.dj;
        if (sn < 0 || sm < 0) continue;
        gen.matrix(MomentTable::index(n, m), MomentTable::index(sn, sm)) += op.coefficient(n, m);
      }
    }
  }
  return gen;
}

namespace detail {

inline Eigen::VectorXcd flatten(const MomentTable& t) {
  const auto data = t.data();
  Eigen::VectorXcd v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) v(static_cast<Eigen::Index>(k)) = data[k];
  return v;
}

inline MomentTable unflatten(const Eigen::VectorXcd& v, Ordering ordering, int max_degree) {
  MomentTable t(ordering, max_degree);
  for (int d = 0; d <= max_degree; ++d) {
    for (int n = d; n >= 0; --n) t(n, d - n) = v(MomentTable::index(n, d - n));
  }
  t(0, 0) = 1.0;
  return t;
}

}  // namespace detail

/// exp(t M) for the generator; exact entrywise exponentials for the
/// diagonal harmonic generators, scaling-and-squaring Pade otherwise.
inline Eigen::MatrixXcd propagator(const EvolutionGenerator& gen, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidParameter, "evolution time must be >= 0");
  if (gen.diagonal()) {
    Eigen::VectorXcd diag(gen.matrix.rows());
    for (Eigen::Index k = 0; k < diag.size(); ++k) diag(k) = std::exp(t * gen.matrix(k, k));
    return diag.asDiagonal();
  }
  return (t * gen.matrix).exp();
}

inline MomentTable propagate(const MomentTable& t0, const EvolutionGenerator& gen, double t) {
  if (t0.max_degree() != gen.max_degree) {
    throw Error(ErrorCode::DimensionMismatch, "table degree " + std::to_string(t0.max_degree()) +
                                                  " vs generator degree " + std::to_string(gen.max_degree));
  }
  require_ordering(t0, gen.ordering(), "propagate");
  const Eigen::VectorXcd v = propagator(gen, t) * detail::flatten(t0);
  return detail::unflatten(v, gen.ordering(), gen.max_degree);
}

/// Tables at each requested time.
inline std::vector<MomentTable> snapshot_series(const MomentTable& t0, const EvolutionGenerator& gen,
                                                const std::vector<double>& times) {
  std::vector<MomentTable> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(propagate(t0, gen, t));
  return out;
}

/// Harmonic-oscillator eigenstate relation on the lattice:
///   normal:     entry(n+1, m+1) + (n+m+1)/2 entry(n, m) = E entry(n, m)
///   antinormal: entry(k+1, l+1) - (k+l+1)/2 entry(k, l) = E entry(k, l)
/// Returns the largest residual over entries of degree <= R-2.
inline double eigen_check(const MomentTable& t, double energy) {
  require_degree(t, 2, "eigen_check");
  const double sign = t.ordering() == Ordering::Normal ? 1.0 : -1.0;
  double worst = 0.0;
  for (int d = 0; d + 2 <= t.max_degree(); ++d) {
    for (int n = d; n >= 0; --n) {
      const int m = d - n;
      const cplx lhs = t(n + 1, m + 1) + sign * 0.5 * (n + m + 1) * t(n, m);
      worst = std::max(worst, std::abs(lhs - energy * t(n, m)));
    }
  }
  return worst;
}

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::HarmonicNormal: return "harmonic-normal";
    case GeneratorKind::HarmonicAntinormal: return "harmonic-antinormal";
    case GeneratorKind::DampedNormal: return "damped";
  }
  return "unknown";
}

}  // namespace qmoment

#endif  // QMOMENT_EVOLUTION_HPP
