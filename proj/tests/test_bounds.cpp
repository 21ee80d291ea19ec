#include "spe/bounds.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace spe;
using std::numbers::pi;

namespace {

BsAngles with_delta(double delta, double base = pi / 4) { return {base, base + delta}; }

SetupSpec lossy_setup() {
  SetupSpec s;
  s.bs1 = {0.68, 0.66, 0.62, 0.71};
  s.bs2 = {0.70, 0.64, 0.66, 0.69};
  s.mirror = {0.97, 0.92};
  return s;
}

// sup over phi of ||R||^2, R the gap between unitarized and product-form interferometers
double scanned_residual(const SetupSpec& s) {
  const auto f = optimal_factorization(s);
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double phi = 2 * pi * k / 2000;
    const Mat4 r = mzi_real_operator(s, phi, true) - factorized_operator(f.u, f.v, phi);
    worst = std::max(worst, std::pow(op_norm(r), 2));
  }
  return worst;
}

}  // namespace

TEST(BoundE, Examples) {
  EXPECT_EQ(bound_e(with_delta(0), with_delta(0)), 0.0);
  EXPECT_NEAR(bound_e(with_delta(0.1), with_delta(0)), 4 * std::pow(std::sin(0.025), 2), 1e-15);
  EXPECT_NEAR(bound_e(with_delta(0.1), with_delta(0)), 2.4995e-3, 1e-7);
  EXPECT_NEAR(bound_e(with_delta(pi / 2, 0.0), with_delta(pi / 2, 0.0)), 2.0, 1e-15);
}

TEST(BoundE, EqualsSquaredResidualWhenSecondSplitterIsNeutral) {
  for (double d : {0.01, 0.1, 0.25, -0.3}) {
    const auto r = residual_norms(with_delta(d), with_delta(0));
    EXPECT_NEAR(bound_e(with_delta(d), with_delta(0)), r.r1 * r.r1, 1e-12);
  }
}

TEST(BoundE, DominatesScannedResidual) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 30; ++k) {
    const SetupSpec s = random_setup(rng);
    const SetupAngles a = setup_angles(s);
    const double e = bound_e(a.bs1.angles, a.bs2.angles);
    EXPECT_LE(scanned_residual(s), e + 1e-12);
  }
}

TEST(BoundE, InvariantUnderPolarizationSwap) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.3, 1.2);
  for (int k = 0; k < 100; ++k) {
    const BsAngles a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const BsAngles as{a.alpha_V, a.alpha_H}, bs{b.alpha_V, b.alpha_H};
    EXPECT_NEAR(bound_e(a, b), bound_e(as, bs), 1e-12);
    const auto r = residual_norms(a, b), rs = residual_norms(as, bs);
    EXPECT_NEAR(r.r1, rs.r1, 1e-12);
    EXPECT_NEAR(r.r2, rs.r2, 1e-12);
  }
}

TEST(Residual, Examples) {
  const auto zero = residual_norms(with_delta(0, 0.7), with_delta(0, 0.9));
  EXPECT_NEAR(zero.r1, 0.0, 1e-15);
  EXPECT_NEAR(zero.r2, 0.0, 1e-15);
  const BsAngles same{0.7, 0.82};
  EXPECT_EQ(residual_norms(same, same).r2, 0.0);
  const auto r = residual_norms(with_delta(0.1), with_delta(0));
  EXPECT_NEAR(r.r1, 0.0499947918, 1e-10);
  EXPECT_NEAR(r.r2, 0.0499947918, 1e-10);
}

TEST(Residual, NormsMatchOperatorNormsOfResidualPieces) {
  // R1 and R2 are the polarization-odd parts of the two unitarized splitters
  // relative to their mean angles; their norms are 2|sin(./4)|.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.4, 1.1);
  for (int k = 0; k < 50; ++k) {
    const BsAngles a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const auto r = residual_norms(a, b);
    // the residual of the product V1 V(phi) V2 at phi = 0 is governed by the summed angle
    const double ua = (a.alpha_H + a.alpha_V) / 2, ub = (b.alpha_H + b.alpha_V) / 2;
    const Mat4 gap0 = bs_operator(a) * bs_operator(b) - tensor(bs_rotation(ua) * bs_rotation(ub), Mat2::Identity());
    EXPECT_NEAR(op_norm(gap0), r.r1, 1e-12);
    const Mat4 gap_pi = bs_operator(a) * tensor(phase_operator(pi), Mat2::Identity()) * bs_operator(b) -
                        tensor(bs_rotation(ua) * phase_operator(pi) * bs_rotation(ub), Mat2::Identity());
    EXPECT_NEAR(op_norm(gap_pi), r.r2, 1e-12);
  }
}

TEST(Etilde, Examples) {
  for (double a : {0.0, 0.2, 0.5, 0.9, 1.0}) EXPECT_NEAR(bound_etilde(0.8, 0.8, a, 1 - a), 0.0, 1e-16);
  EXPECT_EQ(bound_etilde(1.0, 0.7, 1.0, 0.0), 0.0);
  EXPECT_EQ(bound_etilde(1.0, 0.7, 0.0, 1.0), 0.0);
  EXPECT_NEAR(bound_etilde(1.0, 0.9, 0.5, 0.5), 0.0552486187845, 1e-12);
}

TEST(Etilde, RejectsInvalidInputs) {
  EXPECT_THROW(bound_etilde(0.0, 0.9, 0.5, 0.5), input_error);
  EXPECT_THROW(bound_etilde(1.1, 0.9, 0.5, 0.5), input_error);
  EXPECT_THROW(bound_etilde(1.0, 0.9, 0.6, 0.6), input_error);
}

TEST(Compose, IdealSetupIsAllZero) {
  const BoundBundle b = compose_bounds(ideal_setup());
  for (double v : {b.e, b.r1_norm, b.r2_norm, b.e_tilde, b.e_p, b.e_s}) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(b.c_H, 1.0);
  EXPECT_EQ(b.c_V, 1.0);
  EXPECT_EQ(b.weights, WeightSource::generation);
}

TEST(Compose, FormulasAndMonotonicity) {
  const BoundBundle b = compose_bounds(lossy_setup());
  EXPECT_EQ(b.e_p, 2 * std::sqrt(b.e) + b.e + b.e_tilde);
  EXPECT_EQ(b.e_s, 4 * std::sqrt(2.0) * (b.r1_norm + b.r2_norm) +
                       2 * (b.r1_norm * b.r1_norm + b.r2_norm * b.r2_norm + b.r1_norm * b.r2_norm) + 16 * b.e_tilde);
  for (double v : {b.e, b.r1_norm, b.r2_norm, b.e_tilde, b.e_p, b.e_s}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
  for (double h : {1e-3, 1e-1}) {
    EXPECT_GE(compose_e_p(b.e + h, b.e_tilde), b.e_p);
    EXPECT_GE(compose_e_p(b.e, b.e_tilde + h), b.e_p);
    EXPECT_GE(compose_e_s(b.r1_norm + h, b.r2_norm, b.e_tilde), b.e_s);
    EXPECT_GE(compose_e_s(b.r1_norm, b.r2_norm + h, b.e_tilde), b.e_s);
    EXPECT_GE(compose_e_s(b.r1_norm, b.r2_norm, b.e_tilde + h), b.e_s);
  }
}

TEST(Compose, ThroughputsIncludeMirrors) {
  const SetupSpec s = lossy_setup();
  const BoundBundle b = compose_bounds(s);
  const double cH = std::hypot(s.bs1.t_H, s.bs1.r_H) * s.mirror.eta_H * std::hypot(s.bs2.t_H, s.bs2.r_H);
  const double cV = std::hypot(s.bs1.t_V, s.bs1.r_V) * s.mirror.eta_V * std::hypot(s.bs2.t_V, s.bs2.r_V);
  EXPECT_NEAR(b.c_H, cH, 1e-15);
  EXPECT_NEAR(b.c_V, cV, 1e-15);
}

TEST(Compose, WeightSourceFollowsState) {
  std::mt19937_64 rng(4);
  const DensityState st = DensityState::from_matrix(random_density_matrix(rng));
  const BoundBundle b = compose_bounds(lossy_setup(), st);
  EXPECT_EQ(b.weights, WeightSource::state);
  EXPECT_EQ(b.alpha, st.alpha);
  EXPECT_EQ(b.e_tilde, bound_etilde(b.c_H, b.c_V, st.alpha, st.beta));
}

TEST(MaxMinDistance, PolarizationIndependentIsZero) {
  const auto r = verify_maxmin_distance(with_delta(0, 0.7), with_delta(0, 0.9), 1e-2);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_NEAR(r.numeric, 0.0, 1e-12);
  EXPECT_NEAR(r.numeric_general, 0.0, 1e-12);
}

TEST(MaxMinDistance, SingleContrastAtFineResolution) {
  const auto r = verify_maxmin_distance(with_delta(0.1), with_delta(0), 1e-3);
  EXPECT_NEAR(r.analytic, 8 * (1 - std::cos(0.05)), 1e-15);
  EXPECT_LE(std::abs(r.gap), 1e-2);
  EXPECT_LE(std::abs(r.general_gap), 1e-2);
  // the squared HS distance is four times the uniform operator-norm bound here
  EXPECT_NEAR(r.numeric, 4 * bound_e(with_delta(0.1), with_delta(0)), 1e-6);
}

TEST(MaxMinDistance, RestrictedAndGeneralAgree) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 1.2);
  for (int k = 0; k < 5; ++k) {
    const BsAngles a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const auto r = verify_maxmin_distance(a, b, 2e-3);
    EXPECT_LE(std::abs(r.gap), 1e-2);
    EXPECT_LE(std::abs(r.general_gap), 1e-2);
    EXPECT_LE(std::abs(r.numeric_momentum - r.numeric), 1e-2);
  }
}

TEST(MaxMinDistance, GapDoesNotGrowWithFinerGrid) {
  const BsAngles a{0.6, 0.95}, b{0.85, 0.7};
  const auto coarse = verify_maxmin_distance(a, b, 1e-1);
  const auto fine = verify_maxmin_distance(a, b, 1e-3);
  EXPECT_LE(std::abs(fine.gap), std::abs(coarse.gap) + 1e-12);
}

TEST(MonteCarlo, EqualThroughputHasNoPostselectionError) {
  SetupSpec s;
  s.bs1 = {0.6 * std::cos(0.7), 0.6 * std::sin(0.7), 0.6 * std::cos(0.9), 0.6 * std::sin(0.9)};
  const auto r = verify_etilde_montecarlo(s, 500, 1);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LE(r.max_observed, 1e-12);
}

TEST(MonteCarlo, SingleBlockStateHasNoPostselectionError) {
  const SetupSpec s = lossy_setup();
  const DensityState st = DensityState::from_matrix(basis_projector(0));
  EXPECT_EQ(bound_etilde(compose_bounds(s).c_H, compose_bounds(s).c_V, st.alpha, st.beta), 0.0);
  for (double phi : {0.0, 1.0, 2.5})
    for (double theta : {0.0, 0.7}) {
      const auto a = real_distribution(st, {phi, theta}, s), b = normalized_real_distribution(st, {phi, theta}, s);
      for (int c = 0; c < 4; ++c) EXPECT_NEAR(a.channel[c], b.channel[c], 1e-12);
    }
}

TEST(MonteCarlo, GenericLossySetupHasNoViolations) {
  const SetupSpec s = lossy_setup();
  EXPECT_EQ(verify_etilde_montecarlo(s, 10000, 2).violations, 0u);
  EXPECT_EQ(verify_p_bound_montecarlo(s, 10000, 3).violations, 0u);
  EXPECT_EQ(verify_s_bound_montecarlo(s, 2000, 4).violations, 0u);
}

TEST(MonteCarlo, RandomSetupsHaveNoViolations) {
  EXPECT_EQ(verify_random_setups(BoundCheck::etilde, 5000, 5).violations, 0u);
  EXPECT_EQ(verify_random_setups(BoundCheck::p_bound, 5000, 6).violations, 0u);
  EXPECT_EQ(verify_random_setups(BoundCheck::s_bound, 1000, 7).violations, 0u);
}

TEST(MonteCarlo, DeterministicForSeed) {
  const auto a = verify_random_setups(BoundCheck::p_bound, 300, 9);
  const auto b = verify_random_setups(BoundCheck::p_bound, 300, 9);
  EXPECT_EQ(a.max_observed, b.max_observed);
  EXPECT_EQ(a.max_ratio, b.max_ratio);
  EXPECT_NE(a.max_observed, verify_random_setups(BoundCheck::p_bound, 300, 10).max_observed);
}

TEST(RandomSetup, RespectsRanges) {
  std::mt19937_64 rng(8);
  const RandomSetupRange range;
  for (int k = 0; k < 1000; ++k) {
    const SetupSpec s = random_setup(rng, range);
    EXPECT_NO_THROW(validate(s));
    for (const auto& bs : {s.bs1, s.bs2}) {
      const auto n = normalize_bs(bs);
      EXPECT_LE(std::abs(n.angles.delta()), range.max_delta + 1e-12);
      EXPECT_GE(bs.throughput_H(), range.min_throughput - 1e-12);
      EXPECT_GE(bs.throughput_V(), range.min_throughput - 1e-12);
    }
  }
}
