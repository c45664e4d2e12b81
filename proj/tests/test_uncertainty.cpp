#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qmoment/moments.hpp"
#include "qmoment/tomography.hpp"
#include "qmoment/uncertainty.hpp"

using namespace qmoment;

namespace {

std::vector<StateSpec> catalogue() {
  return {states::Fock{0}, states::Fock{1}, states::Fock{2}, states::Fock{3},
          states::Coherent{{0.5, 0.0}}, states::Coherent{{-0.4, 0.7}}, states::Thermal{0.5},
          states::Thermal{1.0}, states::EvenCoherent{{0.5, 0.0}}, states::EvenCoherent{{0.3, 0.6}},
          states::OddCoherent{{0.5, 0.0}}, states::OddCoherent{{0.8, -0.2}}};
}

}  // namespace

TEST(UrSimple, KnownValues) {
  EXPECT_NEAR(ur_simple(closed_form_moments(states::Fock{1}, Ordering::Normal, 2)), 2.0, 1e-15);
  for (cplx a : {cplx{0.5, 0.0}, cplx{-1.2, 0.4}}) {
    EXPECT_NEAR(ur_simple(closed_form_moments(states::Coherent{a}, Ordering::Normal, 2)), 0.0, 1e-12);
  }
  MomentTable corrupted = closed_form_moments(states::Fock{0}, Ordering::Normal, 2);
  corrupted(0, 2) = 5.0;
  corrupted(2, 0) = 5.0;
  EXPECT_NEAR(ur_simple(corrupted), -25.0, 1e-15);
  EXPECT_FALSE(ur_simple_verdict(ur_simple(corrupted)).pass);
  EXPECT_THROW(ur_simple(closed_form_moments(states::Fock{0}, Ordering::Normal, 1)), Error);
}

TEST(UrTomographic, VacuumThermalAndCoherent) {
  const auto thetas = equispaced_angles(8);
  const auto vac = tomographic_moments_from_normal_moments(closed_form_moments(states::Fock{0}, Ordering::Normal, 2), thetas, 2);
  EXPECT_NEAR(ur_tomographic(vac, 0.0), 0.0, 1e-15);
  const double nbar = 1.0 / (std::exp(1.0) - 1.0);
  const auto th = tomographic_moments_from_normal_moments(closed_form_moments(states::Thermal{1.0}, Ordering::Normal, 2), thetas, 2);
  EXPECT_NEAR(ur_tomographic(th, 0.0), (0.5 + nbar) * (0.5 + nbar) - 0.25, 1e-14);
  const std::vector<double> angles{0.0, 1.0, 2.0, 1.0 + std::numbers::pi / 4, 2.0 + std::numbers::pi / 4,
                                   std::numbers::pi / 4, std::numbers::pi / 2, 1.0 + std::numbers::pi / 2,
                                   2.0 + std::numbers::pi / 2};
  const auto coh =
      tomographic_moments_from_normal_moments(closed_form_moments(states::Coherent{{0.5, 0.0}}, Ordering::Normal, 2), angles, 2);
  for (double t : {0.0, 1.0, 2.0}) EXPECT_NEAR(ur_tomographic(coh, t), 0.0, 1e-14);
}

TEST(UrTomographic, IndependentOfAngleAndEqualToMomentForm) {
  // LHS - 1/4 of the tomographic relation equals the moment-form LHS
  std::vector<double> angles;
  for (double t : {0.0, 0.3, 1.1, 2.9}) {
    for (double o : {0.0, std::numbers::pi / 4, std::numbers::pi / 2}) angles.push_back(t + o);
  }
  for (const auto& spec : catalogue()) {
    const MomentTable t = closed_form_moments(spec, Ordering::Normal, 2);
    const auto tm = tomographic_moments_from_normal_moments(t, angles, 2);
    const double first = ur_tomographic(tm, 0.0);
    for (double theta : {0.3, 1.1, 2.9}) EXPECT_NEAR(ur_tomographic(tm, theta), first, 1e-10) << to_string(spec);
    EXPECT_NEAR(first, ur_simple(t), 1e-10) << to_string(spec);
  }
}

TEST(UrTomographic, MissingAngles) {
  const auto tm = tomographic_moments_from_normal_moments(closed_form_moments(states::Fock{0}, Ordering::Normal, 2),
                                                          std::vector<double>{0.0, 0.5}, 2);
  try {
    ur_tomographic(tm, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingAngles);
  }
}

TEST(UrPurityDependent, PureStateReducesToSimpleRelation) {
  EXPECT_NEAR(purity_phi(1.0), 1.0, 1e-15);
  const auto r = ur_purity_dependent(closed_form_moments(states::Fock{1}, Ordering::Normal, 8));
  EXPECT_NEAR(r.bound, 0.0, 1e-9);
  EXPECT_NEAR(r.lhs, 2.0, 1e-14);
  EXPECT_TRUE(r.verdict.pass);
}

TEST(UrPurityDependent, ThermalStatePassesBound) {
  const auto r = ur_purity_dependent(closed_form_moments(states::Thermal{0.5}, Ordering::Normal, 30));
  const double nbar = 1.0 / (std::exp(2.0) - 1.0);
  const double phi = purity_phi(std::tanh(1.0));
  EXPECT_NEAR(r.lhs, nbar + nbar * nbar, 1e-14);
  EXPECT_NEAR(r.bound, (phi * phi - 1) / 4, 1e-8);
  EXPECT_TRUE(r.verdict.pass);
}

TEST(UrPurityDependent, Errors) {
  EXPECT_THROW(purity_phi(5e-4), Error);
  try {
    ur_purity_dependent(closed_form_moments(states::Thermal{2.0}, Ordering::Normal, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PurityNotConverged);
  }
}

TEST(MomentMatrix, OrderOneThirdMinorIsSimpleRelation) {
  for (const auto& spec : catalogue()) {
    const MomentTable t = closed_form_moments(spec, Ordering::Normal, 2);
    const auto r = moment_matrix_psd(t, 1);
    ASSERT_EQ(r.minors.size(), 3u);
    EXPECT_NEAR(r.minors[2], ur_simple(t), 1e-10) << to_string(spec);
    EXPECT_TRUE(r.verdict.pass);
  }
}

TEST(MomentMatrix, FockTwoOrderTwo) {
  const auto r = moment_matrix_psd(closed_form_moments(states::Fock{2}, Ordering::Normal, 4), 2);
  ASSERT_EQ(r.minors.size(), 5u);
  // diag(1, 2, 3, 2, 12)
  EXPECT_NEAR(r.minors[4], 144.0, 1e-10);
  for (double m : r.minors) EXPECT_GE(m, 0.0);
  EXPECT_TRUE(r.verdict.pass);
}

TEST(MomentMatrix, CorruptedTableReportsFirstViolatedMinor) {
  MomentTable t = closed_form_moments(states::Fock{2}, Ordering::Normal, 4);
  t(2, 2) -= 3.0;
  const auto r = moment_matrix_psd(t, 2);
  EXPECT_FALSE(r.verdict.pass);
  EXPECT_EQ(r.verdict.first_violated, 4);
  EXPECT_NEAR(r.minors[3], -6.0, 1e-12);
}

TEST(MomentMatrix, NormalAndAntinormalGiveSameGram) {
  for (const auto& spec : catalogue()) {
    const MomentTable n = closed_form_moments(spec, Ordering::Normal, 6);
    const MomentTable a = closed_form_moments(spec, Ordering::Antinormal, 6);
    EXPECT_LT((moment_gram_matrix(n, 3) - moment_gram_matrix(a, 3)).norm(), 1e-10) << to_string(spec);
  }
}

TEST(MomentMatrix, CatalogueStatesPassUpToOrderThree) {
  for (const auto& spec : catalogue()) {
    for (int order = 1; order <= 3; ++order) {
      EXPECT_TRUE(moment_matrix_psd(closed_form_moments(spec, Ordering::Normal, 2 * order), order).verdict.pass)
          << to_string(spec) << " order " << order;
    }
  }
}

TEST(MomentMatrix, CommutatorReplacementIdentities) {
  const MomentTable n = closed_form_moments(states::EvenCoherent{{0.4, 0.3}}, Ordering::Normal, 4);
  const Eigen::MatrixXcd g = moment_gram_matrix(n, 2);
  // row a, column a^dag: <a a^dag> = <a^dag a> + 1
  EXPECT_NEAR(std::abs(g(2, 2) - (n(1, 1) + 1.0)), 0.0, 1e-14);
  // <a^2 (a^dag)^2> = <(a^dag)^2 a^2> + 4 <a^dag a> + 2
  EXPECT_NEAR(std::abs(g(4, 4) - (n(2, 2) + 4.0 * n(1, 1) + 2.0)), 0.0, 1e-14);
  // <a (a^dag)^2> = <(a^dag)^2 a> + 2 <a^dag>
  EXPECT_NEAR(std::abs(g(2, 4) - (n(2, 1) + 2.0 * n(1, 0))), 0.0, 1e-14);
  EXPECT_THROW(moment_gram_matrix(n, 3), Error);
}

TEST(UncertaintyReport, CombinesAllTests) {
  const auto r = uncertainty_report(closed_form_moments(states::Thermal{0.5}, Ordering::Antinormal, 30), 2);
  EXPECT_TRUE(r.simple.pass);
  ASSERT_TRUE(r.purity_relation.has_value());
  EXPECT_TRUE(r.purity_relation->verdict.pass);
  EXPECT_TRUE(r.psd.verdict.pass);
  const auto low = uncertainty_report(closed_form_moments(states::Thermal{2.0}, Ordering::Normal, 4), 2);
  EXPECT_FALSE(low.purity_relation.has_value());
  EXPECT_TRUE(low.purity_error.has_value());
}
