#ifndef QMOMENT_MOMENT_TABLE_HPP
#define QMOMENT_MOMENT_TABLE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmoment/error.hpp"

namespace qmoment {

using cplx = std::complex<double>;

enum class Ordering { Normal, Antinormal };

constexpr std::string_view to_string(Ordering o) {
  return o == Ordering::Normal ? "normal" : "antinormal";
}

inline Ordering parse_ordering(std::string_view s) {
  if (s == "normal") return Ordering::Normal;
  if (s == "antinormal") return Ordering::Antinormal;
  throw Error(ErrorCode::ParseError, "unknown ordering '" + std::string(s) + "'");
}

constexpr Ordering opposite(Ordering o) {
  return o == Ordering::Normal ? Ordering::Antinormal : Ordering::Normal;
}

/// Triangular lattice of ordered moments up to total degree R.
///
/// For Normal ordering entry (n, m) is <(a^dag)^n a^m>; for Antinormal
/// entry (k, l) is <a^k (a^dag)^l>. Storage is total-degree-major and,
/// within one degree d, runs over the first index descending:
/// (d,0), (d-1,1), ..., (0,d). The evolution generator flattens the
/// lattice in the same order.
class MomentTable {
 public:
  MomentTable() : MomentTable(Ordering::Normal, 0) {}

  /// Entry (0,0) = 1, everything else zero.
  MomentTable(Ordering ordering, int max_degree)
      : ordering_(ordering), max_degree_(max_degree) {
    if (max_degree < 0) {
      throw Error(ErrorCode::InvalidParameter, "max_degree must be >= 0");
    }
    entries_.assign(lattice_size(max_degree), cplx{0.0, 0.0});
    entries_[0] = 1.0;
  }

  static constexpr std::size_t lattice_size(int max_degree) {
    return static_cast<std::size_t>(max_degree + 1) * static_cast<std::size_t>(max_degree + 2) / 2;
  }

  static constexpr std::size_t index(int i, int j) {
    const int d = i + j;
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(d + 1) / 2 +
           static_cast<std::size_t>(d - i);
  }

  Ordering ordering() const noexcept { return ordering_; }
  int max_degree() const noexcept { return max_degree_; }
  std::size_t size() const noexcept { return entries_.size(); }

  bool contains(int i, int j) const noexcept {
    return i >= 0 && j >= 0 && i + j <= max_degree_;
  }

  cplx operator()(int i, int j) const { return entries_[checked_index(i, j)]; }
  cplx& operator()(int i, int j) { return entries_[checked_index(i, j)]; }

  /// Zero outside the lattice (negative or over-degree indices).
  cplx value_or_zero(int i, int j) const noexcept {
    return contains(i, j) ? entries_[index(i, j)] : cplx{0.0, 0.0};
  }

  std::span<const cplx> data() const noexcept { return entries_; }
  std::span<cplx> data() noexcept { return entries_; }

  /// Copy restricted to degree <= r.
  MomentTable truncated(int r) const {
    if (r > max_degree_) {
      throw Error(ErrorCode::InsufficientDegree,
                  "cannot truncate degree " + std::to_string(max_degree_) + " table to " +
                      std::to_string(r));
    }
    MomentTable out(ordering_, r);
    for (std::size_t k = 0; k < out.entries_.size(); ++k) out.entries_[k] = entries_[k];
    return out;
  }

  /// Largest violation of Hermiticity entry(i,j) = conj(entry(j,i)).
  double hermiticity_defect() const {
    double worst = 0.0;
    for (int d = 0; d <= max_degree_; ++d) {
      for (int i = 0; i <= d; ++i) {
        worst = std::max(worst, std::abs((*this)(i, d - i) - std::conj((*this)(d - i, i))));
      }
    }
    return worst;
  }

  /// Throws InvalidParameter if the normalization, Hermiticity or
  /// diagonal-positivity invariants fail at the given tolerance.
  void validate(double tol = 1e-9) const {
    if (std::abs(entries_[0] - cplx{1.0, 0.0}) > tol) {
      throw Error(ErrorCode::InvalidParameter, "entry(0,0) must equal 1");
    }
    if (const double h = hermiticity_defect(); h > tol) {
      throw Error(ErrorCode::InvalidParameter,
                  "table is not Hermitian (defect " + std::to_string(h) + ")");
    }
    for (int n = 0; 2 * n <= max_degree_; ++n) {
      const cplx v = (*this)(n, n);
      if (std::abs(v.imag()) > tol || v.real() < -tol) {
        throw Error(ErrorCode::InvalidParameter,
                    "diagonal entry (" + std::to_string(n) + "," + std::to_string(n) +
                        ") must be real and non-negative");
      }
    }
  }

  friend double max_abs_difference(const MomentTable& a, const MomentTable& b) {
    const int r = std::min(a.max_degree_, b.max_degree_);
    double worst = 0.0;
    for (std::size_t k = 0; k < lattice_size(r); ++k) {
      worst = std::max(worst, std::abs(a.entries_[k] - b.entries_[k]));
    }
    return worst;
  }

 private:
  std::size_t checked_index(int i, int j) const {
    if (!contains(i, j)) {
      throw Error(ErrorCode::InsufficientDegree,
                  "entry (" + std::to_string(i) + "," + std::to_string(j) +
                      ") outside table of degree " + std::to_string(max_degree_));
    }
    return index(i, j);
  }

  Ordering ordering_;
  int max_degree_;
  std::vector<cplx> entries_;
};

inline void require_ordering(const MomentTable& t, Ordering expected, std::string_view what) {
  if (t.ordering() != expected) {
    throw Error(ErrorCode::OrderingMismatch,
                std::string(what) + " requires a " + std::string(to_string(expected)) +
                    "-ordered table, got " + std::string(to_string(t.ordering())));
  }
}

inline void require_degree(const MomentTable& t, int needed, std::string_view what) {
  if (t.max_degree() < needed) {
    throw Error(ErrorCode::InsufficientDegree,
                std::string(what) + " needs max_degree >= " + std::to_string(needed) +
                    ", table has " + std::to_string(t.max_degree()));
  }
}

}  // namespace qmoment

#endif  // QMOMENT_MOMENT_TABLE_HPP
