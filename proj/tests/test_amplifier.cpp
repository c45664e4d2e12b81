#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qmoment/amplifier.hpp"
#include "qmoment/fock_oracle.hpp"
#include "two_mode.hpp"

using namespace qmoment;

namespace {

MomentTable vacuum_antinormal(int r) { return closed_form_moments(states::Fock{0}, Ordering::Antinormal, r); }

/// Populated levels 0..cutoff, stored with three spare empty levels so degree-3 moments are legal.
FockState embedded(const Eigen::MatrixXcd& rho) {
  Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(rho.rows() + 3, rho.cols() + 3);
  big.topLeftCorner(rho.rows(), rho.cols()) = rho;
  return FockState(big);
}

/// Coherent amplitudes truncated to `cutoff` and renormalized, so the state lives exactly in the small space.
FockState truncated_coherent(cplx alpha, int cutoff) {
  Eigen::VectorXcd c(cutoff + 1);
  c(0) = 1.0;
  for (int n = 1; n <= cutoff; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  c.normalize();
  return embedded(c * c.adjoint());
}

FockState truncated_thermal(double t, int cutoff) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) rho(n, n) = std::exp(-n / t);
  return embedded(rho / rho.trace());
}

}  // namespace

TEST(AmplifyMoments, MatchesTwoModeBruteForceSignalPort) {
  for (double g : {2.0, 4.0}) {
    for (const FockState& sig : {truncated_coherent({0.5, 0.2}, 6), realize(states::Fock{1}, 9),
                                 realize(states::Fock{3}, 9)}) {
      const FockState noise = truncated_thermal(0.5, 6);
      const AmplifierModel amp(g, oracle_moments(noise, Ordering::Normal, 3));
      const MomentTable out = amplify_moments(oracle_moments(sig, Ordering::Antinormal, 3), amp, 3);
      const MomentTable brute = oracle::two_mode_output_moments(sig, noise, g, false, 3);
      EXPECT_LT(max_abs_difference(out, brute), 1e-9) << "g=" << g;
    }
  }
}

TEST(AmplifyMoments, MatchesTwoModeBruteForceIdlerPort) {
  for (double g : {2.0, 4.0}) {
    const FockState sig = truncated_coherent({0.3, -0.4}, 6);
    const FockState noise = truncated_thermal(0.8, 6);
    const AmplifierModel amp(g, oracle_moments(noise, Ordering::Normal, 3), Port::Idler);
    const MomentTable out = amplify_moments(oracle_moments(sig, Ordering::Normal, 3), amp, 3);
    const MomentTable brute = oracle::two_mode_output_moments(sig, noise, g, true, 3);
    EXPECT_LT(max_abs_difference(out, brute), 1e-9) << "g=" << g;
  }
}

TEST(AmplifyMoments, VacuumInVacuumNoise) {
  // <b b^dag> = g <a a^dag> + (g-1) <h^dag h> = g on vacuum inputs
  const double g = 3.0;
  const AmplifierModel amp(g, closed_form_moments(states::Fock{0}, Ordering::Normal, 2));
  const MomentTable out = amplify_moments(vacuum_antinormal(2), amp, 2);
  EXPECT_NEAR(out(1, 1).real(), g, 1e-15);
  EXPECT_EQ(out(0, 0), cplx(1.0));
}

TEST(AmplifyMoments, CoherentMeanIsScaled) {
  const auto amp = AmplifierModel::thermal(4.0, 0.5, 2);
  const MomentTable sig = closed_form_moments(states::Coherent{{0.5, 0.0}}, Ordering::Antinormal, 2);
  EXPECT_NEAR(amplify_moments(sig, amp, 2)(1, 0).real(), 1.0, 1e-15);
}

TEST(AmplifyMoments, TransparentLimit) {
  const MomentTable sig = closed_form_moments(states::EvenCoherent{{0.5, 0.1}}, Ordering::Antinormal, 4);
  double previous = 1.0;
  for (double excess : {1e-4, 1e-6, 1e-8}) {
    const auto amp = AmplifierModel::thermal(1.0 + excess, 0.5, 4);
    const double diff = max_abs_difference(amplify_moments(sig, amp, 4), sig);
    EXPECT_LT(diff, 20 * std::sqrt(excess));
    EXPECT_LT(diff, previous);
    previous = diff;
  }
}

TEST(AmplifyMoments, RequiresMatchingOrdering) {
  const auto amp = AmplifierModel::thermal(4.0, 0.5, 2);
  EXPECT_THROW(amplify_moments(closed_form_moments(states::Fock{0}, Ordering::Normal, 2), amp, 2), Error);
  EXPECT_THROW(amplify_moments(vacuum_antinormal(2), amp, 3), Error);
}

TEST(Calibration, FirstRowClosedForm) {
  // <b^0 (b^dag)^n>_vac = y  ->  <h^n> = (g-1)^{-n/2} y
  const double g = 5.0;
  MomentTable response(Ordering::Antinormal, 3);
  response(0, 1) = cplx(0.3, 0.1);
  response(1, 0) = cplx(0.3, -0.1);
  response(0, 2) = cplx(0.2, 0.0);
  response(2, 0) = cplx(0.2, 0.0);
  response(1, 1) = cplx(g, 0.0);
  const auto report = calibrate_noise(response, g, 3);
  EXPECT_NEAR(std::abs(report.noise_moments(0, 1) - cplx(0.3, 0.1) / std::sqrt(g - 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(report.noise_moments(0, 2) - cplx(0.2, 0.0) / (g - 1)), 0.0, 1e-15);
}

TEST(Calibration, FourthOrderClosedForm) {
  const double g = 2.0;
  const auto amp = AmplifierModel::thermal(g, 0.7, 4);
  const MomentTable resp = amplify_moments(vacuum_antinormal(4), amp, 4);
  const auto report = calibrate_noise(resp, g, 4);
  const double gm1 = g - 1;
  const double expected = resp(2, 2).real() / (gm1 * gm1) - 4 * g / (gm1 * gm1) * resp(1, 1).real() +
                          2 * g * g / (gm1 * gm1);
  EXPECT_NEAR(report.noise_moments(2, 2).real(), expected, 1e-12);
  EXPECT_NEAR(report.noise_moments(2, 2).real(), amp.noise()(2, 2).real(), 1e-12);
}

TEST(Calibration, RecoversThermalNoise) {
  for (double g : {2.0, 4.0, 10.0}) {
    for (double t : {0.3, 0.5, 1.0}) {
      const auto amp = AmplifierModel::thermal(g, t, 6);
      const auto report = calibrate_noise(amplify_moments(vacuum_antinormal(6), amp, 6), g, 6);
      EXPECT_LT(max_abs_difference(report.noise_moments, amp.noise()), 1e-9) << g << " " << t;
      EXPECT_EQ(report.condition_numbers.size(), 7u);
    }
  }
  const auto amp = AmplifierModel::thermal(4.0, 0.5, 2);
  const auto report = calibrate_noise(amplify_moments(vacuum_antinormal(2), amp, 2), 4.0, 2);
  EXPECT_NEAR(report.noise_moments(1, 1).real(), 1.0 / (std::exp(2.0) - 1.0), 1e-14);
}

TEST(Calibration, IdlerPort) {
  const auto amp = AmplifierModel::thermal(3.0, 0.6, 4, Port::Idler);
  const MomentTable vac_normal = closed_form_moments(states::Fock{0}, Ordering::Normal, 4);
  const auto report = calibrate_noise(amplify_moments(vac_normal, amp, 4), 3.0, 4, Port::Idler);
  EXPECT_LT(max_abs_difference(report.noise_moments, amp.noise()), 1e-10);
}

TEST(Calibration, GainTooSmall) {
  try {
    calibrate_noise(vacuum_antinormal(2), 1.0 + 1e-10, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GainTooSmall);
  }
  EXPECT_THROW(AmplifierModel::thermal(1.0, 0.5, 2), Error);
}

TEST(Calibration, ConditionNumbersGrowWithDegreeNearUnitGain) {
  const auto amp = AmplifierModel::thermal(1.01, 0.5, 4);
  const auto report = calibrate_noise(amplify_moments(vacuum_antinormal(4), amp, 4), 1.01, 4);
  EXPECT_DOUBLE_EQ(report.condition_numbers[0], 1.0);
  for (std::size_t d = 1; d < report.condition_numbers.size(); ++d) {
    EXPECT_GT(report.condition_numbers[d], report.condition_numbers[d - 1]);
  }
}

TEST(Deamplify, RoundTrip) {
  for (double g : {2.0, 4.0, 10.0}) {
    for (double t : {0.3, 0.5, 1.0}) {
      const auto amp = AmplifierModel::thermal(g, t, 4);
      const MomentTable sig = closed_form_moments(states::Coherent{{0.5, 0.0}}, Ordering::Antinormal, 4);
      EXPECT_LT(max_abs_difference(deamplify_moments(amplify_moments(sig, amp, 4), amp, 4), sig), 1e-9);
    }
  }
}

TEST(Deamplify, VacuumResponseGivesVacuum) {
  const auto amp = AmplifierModel::thermal(4.0, 0.5, 6);
  const MomentTable back = deamplify_moments(amplify_moments(vacuum_antinormal(6), amp, 6), amp, 6);
  for (int k = 0; k <= 3; ++k) EXPECT_NEAR(back(k, k).real(), std::tgamma(k + 1.0), 1e-9);
  EXPECT_LT(max_abs_difference(back, vacuum_antinormal(6)), 1e-9);
}

TEST(Deamplify, IdlerPortReturnsNormalOrdering) {
  const auto amp = AmplifierModel::thermal(4.0, 0.5, 4, Port::Idler);
  const MomentTable sig = closed_form_moments(states::OddCoherent{{0.5, 0.0}}, Ordering::Normal, 4);
  const MomentTable back = deamplify_moments(amplify_moments(sig, amp, 4), amp, 4);
  EXPECT_EQ(back.ordering(), Ordering::Normal);
  EXPECT_LT(max_abs_difference(back, sig), 1e-9);
}

TEST(Deamplify, TriangularStructure) {
  // output entries of degree d do not depend on signal entries above d
  const auto amp = AmplifierModel::thermal(3.0, 0.5, 4);
  MomentTable sig = closed_form_moments(states::Coherent{{0.2, 0.1}}, Ordering::Antinormal, 4);
  const MomentTable before = amplify_moments(sig, amp, 4);
  sig(3, 1) += 5.0;
  sig(0, 4) += 2.0;
  const MomentTable after = amplify_moments(sig, amp, 4);
  EXPECT_EQ(max_abs_difference(before.truncated(3), after.truncated(3)), 0.0);
}

namespace {

/// Direct trapezoid evaluation of the Gaussian convolution at one point.
double convolved(const std::function<double(double)>& w, double x, double g, double sigma) {
  const int steps = 8000;
  const double lim = 10 * sigma;
  const double h = 2 * lim / steps;
  double s = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double y = -lim + k * h;
    s += (k == 0 || k == steps ? 0.5 : 1.0) * w(x / std::sqrt(g) - y) * std::exp(-y * y / (2 * sigma * sigma));
  }
  return s * h / std::sqrt(2 * std::numbers::pi * sigma * sigma * g);
}

}  // namespace

TEST(AmplifiedTomogram, IdentityAtUnitGainWithoutNoise) {
  const MomentTable t = closed_form_moments(states::Fock{2}, Ordering::Normal, 4);
  const TomogramGrid w = tomogram_grid_from_moments(t, 8, 32);
  const TomogramGrid out = amplified_tomogram(w, 1.0, 0.0, true);
  EXPECT_EQ(out.xs, w.xs);
  EXPECT_EQ((out.values - w.values).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AmplifiedTomogram, RejectsLowGainWithoutOverride) {
  const TomogramGrid w = tomogram_grid_from_moments(closed_form_moments(states::Fock{0}, Ordering::Normal, 2), 4, 16);
  EXPECT_THROW(amplified_tomogram(w, 4.0, 1.0), Error);
  EXPECT_NO_THROW(amplified_tomogram(w, 4.0, 1.0, true));
}

TEST(AmplifiedTomogram, VacuumBecomesWiderGaussian) {
  const double g = 20.0;
  const double sigma = 0.8;
  const TomogramGrid w = tomogram_grid_from_moments(closed_form_moments(states::Fock{0}, Ordering::Normal, 2), 4, 48);
  const TomogramGrid out = amplified_tomogram(w, g, sigma);
  const double var = g * (0.5 + sigma * sigma);
  for (int i = 0; i < out.n_x(); ++i) {
    const double x = out.xs[i];
    EXPECT_NEAR(out.values(1, i), std::exp(-x * x / (2 * var)) / std::sqrt(2 * std::numbers::pi * var), 1e-12);
  }
  EXPECT_NO_THROW(out.validate(1e-6));
}

TEST(AmplifiedTomogram, FockOneMatchesDirectConvolution) {
  const double g = 100.0;
  const double sigma = 1.0;
  const TomogramGrid w = tomogram_grid_from_moments(closed_form_moments(states::Fock{1}, Ordering::Normal, 2), 4, 64);
  const TomogramGrid out = amplified_tomogram(w, g, sigma);
  const auto fock1 = [](double x) { return 2 * x * x * std::exp(-x * x) / std::sqrt(std::numbers::pi); };
  double worst = 0.0;
  for (int i = 0; i < out.n_x(); i += 3) worst = std::max(worst, std::abs(out.values(0, i) - convolved(fock1, out.xs[i], g, sigma)));
  EXPECT_LT(worst, 1e-6);
  EXPECT_NO_THROW(out.validate(1e-6));
}

TEST(AmplifiedTomographicMoments, LowOrderClosedForms) {
  const double g = 100.0;
  const double sigma = 1.0;
  const std::vector<double> vac{1.0, 0.0, 0.5, 0.0, 0.75};
  const auto out = amplified_tomographic_moments(vac, g, sigma);
  EXPECT_NEAR(out[2], 150.0, 1e-12);
  const std::vector<double> m{1.0, 0.3, 0.8};
  EXPECT_NEAR(amplified_tomographic_moments(m, g, sigma)[1], 10.0 * 0.3, 1e-14);
}

TEST(AmplifiedTomographicMoments, InverseRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m(7);
    for (double& v : m) v = u(rng);
    // sigma over the thermal range T in [0.2, 2]
    const double g = 10.0 + 10.0 * std::abs(u(rng));
    const double sigma = thermal_sigma(0.2 + 0.9 * std::abs(u(rng)));
    const auto back = deamplified_tomographic_moments(amplified_tomographic_moments(m, g, sigma), g, sigma);
    for (int r = 0; r <= 6; ++r) EXPECT_NEAR(back[r], m[r], 1e-12 * std::max(1.0, std::abs(m[r])));
  }
}

TEST(AmplifiedTomographicMoments, ConsistentWithAmplifiedTomogram) {
  const double g = 100.0;
  const double sigma = thermal_sigma(0.5);
  const MomentTable t = closed_form_moments(states::Coherent{{0.5, 0.0}}, Ordering::Normal, 30);
  const TomogramGrid w = tomogram_grid_from_moments(t, 8, 64);
  const TomogramGrid out = amplified_tomogram(w, g, sigma);
  const auto from_grid = tomographic_moments_from_grid(out, 4);
  const auto predicted = amplified_tomographic_moments(tomographic_moments_from_grid(w, 4), g, sigma);
  for (int a = 0; a < 8; ++a) {
    for (int r = 0; r <= 4; ++r) {
      EXPECT_NEAR(from_grid.values(a, r) / std::pow(g, 0.5 * r), predicted.values(a, r) / std::pow(g, 0.5 * r), 1e-5);
    }
  }
}
