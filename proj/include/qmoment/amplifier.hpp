#ifndef QMOMENT_AMPLIFIER_HPP
#define QMOMENT_AMPLIFIER_HPP

#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmoment/combinatorics.hpp"
#include "qmoment/error.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/moments.hpp"
#include "qmoment/state_spec.hpp"
#include "qmoment/tomography.hpp"

namespace qmoment {

/// Output mode read out by the detector.
///   Signal: b = sqrt(g) a + sqrt(g-1) h^dag
///   Idler:  b = sqrt(g-1) a^dag + sqrt(g) h
enum class Port { Signal, Idler };

inline std::string to_string(Port p) { return p == Port::Signal ? "signal" : "idler"; }

inline Port parse_port(std::string_view s) {
  if (s == "signal") return Port::Signal;
  if (s == "idler") return Port::Idler;
  throw Error(ErrorCode::ParseError, "unknown port '" + std::string(s) + "'");
}

/// sqrt(coth(1/2T) / 2)
inline double thermal_sigma(double temperature) {
  return std::sqrt(0.5 / std::tanh(0.5 / temperature));
}

inline constexpr double kMinGainExcess = 1e-9;

inline void require_gain(double g, std::string_view what) {
  if (!(g - 1.0 >= kMinGainExcess)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.*s: g - 1 = %.3g; the (g-1)^{-n/2} factors make the system ill-conditioned",
                  static_cast<int>(what.size()), what.data(), g - 1.0);
    throw Error(ErrorCode::GainTooSmall, buf);
  }
}

class AmplifierModel {
 public:
  /// `noise` holds the normally ordered moments <(h^dag)^n h^m> of the noise mode.
  AmplifierModel(double gain, MomentTable noise, Port port = Port::Signal)
      : gain_(gain), port_(port), noise_(std::move(noise)) {
    require_gain(gain_, "AmplifierModel");
    require_ordering(noise_, Ordering::Normal, "AmplifierModel noise");
  }

  /// Thermal noise mode at temperature `t_noise`, moments to degree R.
  static AmplifierModel thermal(double gain, double t_noise, int max_degree, Port port = Port::Signal) {
    if (!(t_noise > 0.0)) throw Error(ErrorCode::InvalidParameter, "noise temperature must be > 0");
    AmplifierModel m(gain, closed_form_moments(states::Thermal{t_noise}, Ordering::Normal, max_degree), port);
    m.noise_temperature_ = t_noise;
    return m;
  }

  double gain() const { return gain_; }
  Port port() const { return port_; }
  const MomentTable& noise() const { return noise_; }
  std::optional<double> noise_temperature() const { return noise_temperature_; }

  /// Width of the tomogram-level noise kernel; thermal noise only.
  double sigma() const {
    if (!noise_temperature_) throw Error(ErrorCode::InvalidParameter, "sigma is defined for thermal noise only");
    return thermal_sigma(*noise_temperature_);
  }

  /// Ordering in which signal moments enter (and are recovered from) the forward map.
  Ordering signal_ordering() const { return port_ == Port::Signal ? Ordering::Antinormal : Ordering::Normal; }

 private:
  double gain_;
  Port port_;
  MomentTable noise_;
  std::optional<double> noise_temperature_;
};

namespace detail {

/// Coefficient of S(i,j) N(k-i,l-j) in output entry (k,l):
///   signal port: C(k,i) C(l,j) g^{(i+j)/2} (g-1)^{(k+l-i-j)/2},
///     S antinormal <a^i (a^dag)^j>, N normal <(h^dag)^{k-i} h^{l-j}>;
///   idler port:  C(k,i) C(l,j) (g-1)^{(i+j)/2} g^{(k+l-i-j)/2},
///     S normal <(a^dag)^i a^j>, N antinormal <h^{k-i} (h^dag)^{l-j}>.
/// The idler expansion follows from b^k = sum_i C(k,i) (g-1)^{i/2} (a^dag)^i g^{(k-i)/2} h^{k-i}.
inline double forward_coefficient(Port port, double g, int i, int j, int k, int l) {
  const double signal_factor = port == Port::Signal ? g : g - 1.0;
  const double noise_factor = port == Port::Signal ? g - 1.0 : g;
  return binomial(k, i) * binomial(l, j) * std::pow(signal_factor, 0.5 * (i + j)) *
         std::pow(noise_factor, 0.5 * (k + l - i - j));
}

inline MomentTable noise_for_port(const MomentTable& normal_noise, Port port) {
  return port == Port::Signal ? normal_noise : convert_ordering(normal_noise);
}

inline MomentTable vacuum_moments(Ordering ordering, int max_degree) {
  MomentTable t(ordering, max_degree);
  if (ordering == Ordering::Antinormal) {
    for (int k = 0; 2 * k <= max_degree; ++k) t(k, k) = factorial(k);
  }
  return t;
}

inline cplx forward_entry(Port port, double g, const MomentTable& s, const MomentTable& n, int k, int l) {
  cplx sum{0.0, 0.0};
  for (int i = 0; i <= k; ++i) {
    for (int j = 0; j <= l; ++j) sum += forward_coefficient(port, g, i, j, k, l) * s(i, j) * n(k - i, l - j);
  }
  return sum;
}

/// Singular values based condition number of the leading block of
/// `map` covering degrees 0..d, for every d.
inline std::vector<double> condition_numbers_by_degree(const Eigen::MatrixXcd& map, int max_degree) {
  std::vector<double> out;
  for (int d = 0; d <= max_degree; ++d) {
    const int n = MomentTable::lattice_size(d);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(map.topLeftCorner(n, n));
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    out.push_back(smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity());
  }
  return out;
}

inline void require_well_posed(const std::vector<double>& conds, std::string_view what) {
  for (std::size_t d = 0; d < conds.size(); ++d) {
    if (!std::isfinite(conds[d]) || conds[d] > 1.0 / std::numeric_limits<double>::epsilon()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%.*s: condition number %.3g at degree %zu", static_cast<int>(what.size()),
                    what.data(), conds[d], d);
      throw Error(ErrorCode::SingularSystem, buf);
    }
  }
}

}  // namespace detail

/// Moments <b^k (b^dag)^l> of the amplifier output. The signal table must be
/// antinormal for the signal port and normal for the idler port.
inline MomentTable amplify_moments(const MomentTable& signal, const AmplifierModel& amp, int max_degree) {
  require_ordering(signal, amp.signal_ordering(), "amplify_moments signal");
  require_degree(signal, max_degree, "amplify_moments signal");
  require_degree(amp.noise(), max_degree, "amplify_moments noise");
  const MomentTable noise = detail::noise_for_port(amp.noise(), amp.port());
  MomentTable out(Ordering::Antinormal, max_degree);
  for (int d = 0; d <= max_degree; ++d) {
    for (int k = d; k >= 0; --k) out(k, d - k) = detail::forward_entry(amp.port(), amp.gain(), signal, noise, k, d - k);
  }
  return out;
}

struct CalibrationReport {
  double gain = 0.0;
  Port port = Port::Signal;
  /// Normally ordered noise moments.
  MomentTable noise_moments{Ordering::Normal, 0};
  std::vector<double> condition_numbers;

  AmplifierModel model() const { return AmplifierModel(gain, noise_moments, port); }
};

/// Recovers the noise moments from the amplifier's response to a vacuum
/// signal. The pivot of entry (k,l) is (g-1)^{(k+l)/2} on the signal port and
/// g^{(k+l)/2} on the idler port; lower-degree noise moments are substituted.
inline CalibrationReport calibrate_noise(const MomentTable& vacuum_response, double g, int max_degree,
                                         Port port = Port::Signal) {
  require_gain(g, "calibrate_noise");
  require_ordering(vacuum_response, Ordering::Antinormal, "calibrate_noise");
  require_degree(vacuum_response, max_degree, "calibrate_noise");
  const Ordering signal_ordering = port == Port::Signal ? Ordering::Antinormal : Ordering::Normal;
  const MomentTable vac = detail::vacuum_moments(signal_ordering, max_degree);
  const Ordering noise_ordering = port == Port::Signal ? Ordering::Normal : Ordering::Antinormal;

  const int size = MomentTable::lattice_size(max_degree);
  Eigen::MatrixXcd map = Eigen::MatrixXcd::Zero(size, size);
  MomentTable noise(noise_ordering, max_degree);
  for (int d = 0; d <= max_degree; ++d) {
    for (int k = d; k >= 0; --k) {
      const int l = d - k;
      cplx rest{0.0, 0.0};
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; j <= l; ++j) {
          const double c = detail::forward_coefficient(port, g, i, j, k, l) * vac(i, j).real();
          map(MomentTable::index(k, l), MomentTable::index(k - i, l - j)) = c;
          if (i != 0 || j != 0) rest += c * noise(k - i, l - j);
        }
      }
      const double pivot = detail::forward_coefficient(port, g, 0, 0, k, l);
      noise(k, l) = (vacuum_response(k, l) - rest) / pivot;
    }
  }
  CalibrationReport report;
  report.gain = g;
  report.port = port;
  report.noise_moments = port == Port::Signal ? noise : convert_ordering(noise);
  report.condition_numbers = detail::condition_numbers_by_degree(map, max_degree);
  return report;
}

/// Solves the forward map for the signal moments, degree by degree. The result
/// is antinormal for the signal port and normal for the idler port.
inline MomentTable deamplify_moments(const MomentTable& amplified, const AmplifierModel& amp, int max_degree) {
  require_ordering(amplified, Ordering::Antinormal, "deamplify_moments");
  require_degree(amplified, max_degree, "deamplify_moments");
  require_degree(amp.noise(), max_degree, "deamplify_moments noise");
  const double g = amp.gain();
  const MomentTable noise = detail::noise_for_port(amp.noise(), amp.port());

  const int size = MomentTable::lattice_size(max_degree);
  Eigen::MatrixXcd map = Eigen::MatrixXcd::Zero(size, size);
  MomentTable signal(amp.signal_ordering(), max_degree);
  for (int d = 0; d <= max_degree; ++d) {
    for (int k = d; k >= 0; --k) {
      const int l = d - k;
      cplx rest{0.0, 0.0};
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; j <= l; ++j) {
          const cplx c = detail::forward_coefficient(amp.port(), g, i, j, k, l) * noise(k - i, l - j);
          map(MomentTable::index(k, l), MomentTable::index(i, j)) = c;
          if (i != k || j != l) rest += c * signal(i, j);
        }
      }
      signal(k, l) = (amplified(k, l) - rest) / map(MomentTable::index(k, l), MomentTable::index(k, l));
    }
  }
  detail::require_well_posed(detail::condition_numbers_by_degree(map, max_degree), "deamplify_moments");
  return signal;
}

/// Condition numbers of the deamplification map for each degree 0..R.
inline std::vector<double> deamplify_condition_numbers(const AmplifierModel& amp, int max_degree) {
  const MomentTable noise = detail::noise_for_port(amp.noise(), amp.port());
  const int size = MomentTable::lattice_size(max_degree);
  Eigen::MatrixXcd map = Eigen::MatrixXcd::Zero(size, size);
  for (int d = 0; d <= max_degree; ++d) {
    for (int k = d; k >= 0; --k) {
      const int l = d - k;
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; j <= l; ++j) {
          map(MomentTable::index(k, l), MomentTable::index(i, j)) =
              detail::forward_coefficient(amp.port(), amp.gain(), i, j, k, l) * noise(k - i, l - j);
        }
      }
    }
  }
  return detail::condition_numbers_by_degree(map, max_degree);
}

inline constexpr double kMinTomogramGain = 10.0;

/// Tomogram after the amplifier in the high-gain thermal-noise regime:
///   w_amp(X) = 1/sqrt(2 pi sigma^2 g) int w(X/sqrt(g) - Y) e^{-Y^2 / 2 sigma^2} dY
/// The convolution uses the input grid's X quadrature. The output X grid is
/// the input rule rescaled to the output width. Gains below 10 are rejected
/// unless `allow_small_gain`, which only prints a warning.
inline TomogramGrid amplified_tomogram(const TomogramGrid& w, double g, double sigma, bool allow_small_gain = false) {
  if (!(g > 0.0) || !(sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "amplified_tomogram needs g > 0 and sigma >= 0");
  }
  if (g < kMinTomogramGain) {
    if (!allow_small_gain) {
      throw Error(ErrorCode::OutOfDomain, "amplified_tomogram assumes g >> 1; got g = " + std::to_string(g) +
                                              " (override to proceed)");
    }
    std::cerr << "warning: amplified_tomogram with g = " << g << " is outside the high-gain regime\n";
  }
  const double root_g = std::sqrt(g);
  TomogramGrid out = w;
  if (sigma == 0.0) {
    for (int i = 0; i < out.n_x(); ++i) {
      out.xs[i] *= root_g;
      out.x_weights[i] *= root_g;
    }
    out.x_scale *= root_g;
    out.values /= root_g;
    return out;
  }
  const double in_scale = w.quadrature == XQuadrature::GaussHermite ? w.x_scale : 1.0;
  const double out_scale = root_g * std::sqrt(in_scale * in_scale + 2.0 * sigma * sigma);
  out = make_gauss_hermite_grid(w.n_theta(), w.n_x(), out_scale);
  out.thetas = w.thetas;
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma * root_g);
  for (int a = 0; a < w.n_theta(); ++a) {
    for (int i = 0; i < out.n_x(); ++i) {
      const double c = out.xs[i] / root_g;
      double s = 0.0;
      for (int k = 0; k < w.n_x(); ++k) {
        const double y = c - w.xs[k];
        s += w.x_weights[k] * w.values(a, k) * std::exp(-y * y / (2.0 * sigma * sigma));
      }
      out.values(a, i) = norm * s;
    }
  }
  return out;
}

/// <X^r>_amp = g^{r/2} sum_l C(r,2l) (2l-1)!! sigma^{2l} <X^{r-2l}>
inline std::vector<double> amplified_tomographic_moments(const std::vector<double>& m, double g, double sigma) {
  std::vector<double> out(m.size(), 0.0);
  for (int r = 0; r < static_cast<int>(m.size()); ++r) {
    double s = 0.0;
    for (int l = 0; 2 * l <= r; ++l) {
      s += binomial(r, 2 * l) * odd_double_factorial(l) * std::pow(sigma, 2 * l) * m[r - 2 * l];
    }
    out[r] = std::pow(g, 0.5 * r) * s;
  }
  return out;
}

/// Inverse of `amplified_tomographic_moments`. The triangular system has the
/// explicit solution <X^r> = sum_l C(r,2l) (2l-1)!! (-sigma^2)^l u_{r-2l} with
/// u_k = <X^k>_amp / g^{k/2}, which avoids accumulating rounding through
/// back-substitution.
inline std::vector<double> deamplified_tomographic_moments(const std::vector<double>& amp, double g, double sigma) {
  std::vector<double> u(amp.size());
  for (std::size_t k = 0; k < amp.size(); ++k) u[k] = amp[k] / std::pow(g, 0.5 * static_cast<double>(k));
  std::vector<double> m(amp.size(), 0.0);
  for (int r = 0; r < static_cast<int>(amp.size()); ++r) {
    double s = 0.0;
    for (int l = 0; 2 * l <= r; ++l) {
      s += binomial(r, 2 * l) * odd_double_factorial(l) * std::pow(-sigma * sigma, l) * u[r - 2 * l];
    }
    m[r] = s;
  }
  return m;
}

namespace detail {

template <class RowMap>
TomographicMoments map_rows(const TomographicMoments& tm, RowMap f) {
  TomographicMoments out = tm;
  out.stderrs.reset();
  std::vector<double> row(static_cast<std::size_t>(tm.max_order) + 1);
  for (Eigen::Index a = 0; a < tm.values.rows(); ++a) {
    for (int r = 0; r <= tm.max_order; ++r) row[r] = tm.values(a, r);
    const auto mapped = f(row);
    for (int r = 0; r <= tm.max_order; ++r) out.values(a, r) = mapped[r];
  }
  return out;
}

}  // namespace detail

inline TomographicMoments amplified_tomographic_moments(const TomographicMoments& tm, double g, double sigma) {
  return detail::map_rows(tm, [&](const std::vector<double>& m) { return amplified_tomographic_moments(m, g, sigma); });
}

inline TomographicMoments deamplified_tomographic_moments(const TomographicMoments& tm, double g, double sigma) {
  return detail::map_rows(tm,
                          [&](const std::vector<double>& m) { return deamplified_tomographic_moments(m, g, sigma); });
}

}  // namespace qmoment

#endif  // QMOMENT_AMPLIFIER_HPP
