#pragma once

// Analytic bounds on the deviation of the realistic interferometer from a
// product-form measurement, and numerical checks of those bounds.

#include "spe/matcore.hpp"
#include "spe/optics.hpp"
#include "spe/optimize.hpp"
#include "spe/qprob.hpp"
#include "spe/state.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string_view>
#include <tuple>

namespace spe {

enum class WeightSource { state, generation };

inline std::string_view to_string(WeightSource s) { return s == WeightSource::state ? "state" : "generation"; }

struct BoundBundle {
  double e = 0.0;
  double r1_norm = 0.0;
  double r2_norm = 0.0;
  double e_tilde = 0.0;
  double e_p = 0.0;
  double e_s = 0.0;
  double c_H = 1.0;
  double c_V = 1.0;
  double alpha = 0.5;
  double beta = 0.5;
  WeightSource weights = WeightSource::generation;
};

/// Uniform-in-phi bound on ||R R^†||:
/// e = 2 - 2 min{cos((D1 + D2)/2), cos((D1 - D2)/2)}, D_k = alpha_k^V - alpha_k^H.
inline double bound_e(const BsAngles& bs1, const BsAngles& bs2) {
  const double d1 = bs1.delta();
  const double d2 = bs2.delta();
  return 2.0 - 2.0 * std::min(std::cos((d1 + d2) / 2), std::cos((d1 - d2) / 2));
}

struct ResidualNorms {
  double r1 = 0.0;
  double r2 = 0.0;
};

inline ResidualNorms residual_norms(const BsAngles& bs1, const BsAngles& bs2) {
  const double sum = bs1.alpha_H + bs2.alpha_H - bs1.alpha_V - bs2.alpha_V;
  const double diff = (bs1.alpha_H - bs2.alpha_H) - (bs1.alpha_V - bs2.alpha_V);
  return {2.0 * std::abs(std::sin(sum / 4)), 2.0 * std::abs(std::sin(diff / 4))};
}

/// Bound on the post-selection error from unequal polarization losses.
inline double bound_etilde(double c_H, double c_V, double alpha, double beta) {
  if (!(c_H > 0.0 && c_H <= 1.0 + 1e-12 && c_V > 0.0 && c_V <= 1.0 + 1e-12))
    throw input_error("c_H and c_V must lie in (0,1]");
  if (alpha < -1e-12 || beta < -1e-12 || std::abs(alpha + beta - 1.0) > 1e-9)
    throw input_error("alpha and beta must be nonnegative and sum to 1");
  alpha = std::max(alpha, 0.0);
  beta = std::max(beta, 0.0);
  const double ch2 = c_H * c_H, cv2 = c_V * c_V;
  const double denom = alpha * ch2 + beta * cv2;
  const double g2 = alpha * beta * (ch2 - cv2) / denom;
  const double g1 = std::sqrt(alpha * beta) * (c_H * c_V - alpha * cv2 - beta * ch2) / denom;
  return std::abs(g2) + std::abs(g1);
}

inline double compose_e_p(double e, double e_tilde) { return 2.0 * std::sqrt(e) + e + e_tilde; }

inline double compose_e_s(double r1, double r2, double e_tilde) {
  return 4.0 * std::numbers::sqrt2 * (r1 + r2) + 2.0 * (r1 * r1 + r2 * r2 + r1 * r2) + 16.0 * e_tilde;
}

/// All bounds for a setup. Block weights come from the state when given,
/// otherwise from the generation beam splitter.
inline BoundBundle compose_bounds(const SetupSpec& setup, const std::optional<DensityState>& state = std::nullopt) {
  const SetupAngles a = setup_angles(setup);
  BoundBundle b;
  b.c_H = a.bs1.c_H * a.bs2.c_H;
  b.c_V = a.bs1.c_V * a.bs2.c_V;
  if (state) {
    b.alpha = state->alpha;
    b.beta = state->beta;
    b.weights = WeightSource::state;
  } else {
    std::tie(b.alpha, b.beta) = generation_weights(setup.gen);
    b.weights = WeightSource::generation;
  }
  b.e = bound_e(a.bs1.angles, a.bs2.angles);
  const ResidualNorms r = residual_norms(a.bs1.angles, a.bs2.angles);
  b.r1_norm = r.r1;
  b.r2_norm = r.r2;
  b.e_tilde = bound_etilde(b.c_H, b.c_V, b.alpha, b.beta);
  b.e_p = compose_e_p(b.e, b.e_tilde);
  b.e_s = compose_e_s(b.r1_norm, b.r2_norm, b.e_tilde);
  return b;
}

// ---------------------------------------------------------------------------
// Max-min Hilbert-Schmidt distance to product-form operators

struct MaxMinReport {
  double analytic = 0.0;         ///< 8(1 - min{|cos(X/2)|, |cos(Y/2)|})
  double numeric = 0.0;          ///< max_phi min_{u,v} ||U - U(u)V(phi)U(v) ⊗ I||^2
  double numeric_momentum = 0.0; ///< max_phi min_{A in U(2)} ||U - A ⊗ I||^2
  double numeric_general = 0.0;  ///< max_phi min_{A,B in U(2)} ||U - A ⊗ B||^2
  double gap = 0.0;              ///< numeric - analytic
  double general_gap = 0.0;      ///< numeric_general - numeric
};

inline double maxmin_analytic(const BsAngles& bs1, const BsAngles& bs2) {
  const double x = bs1.alpha_H + bs2.alpha_H - bs1.alpha_V - bs2.alpha_V;
  const double y = bs1.alpha_H - bs2.alpha_H - bs1.alpha_V + bs2.alpha_V;
  return 8.0 * (1.0 - std::min(std::abs(std::cos(x / 2)), std::abs(std::cos(y / 2))));
}

namespace detail {

inline Mat4 unitarized_mzi(const BsAngles& bs1, const BsAngles& bs2, double phi) {
  return bs_operator(bs1) * tensor(phase_operator(phi), Mat2::Identity()) * bs_operator(bs2);
}

/// K[m][m'] = sum_{p,p'} conj(U[(m,p),(m',p')]) B[p][p'], so Tr[U^†(A ⊗ B)] = Tr[A K^T].
inline Mat2 contract_polarization(const Mat4& u, const Mat2& b) {
  Mat2 k = Mat2::Zero();
  for (int m = 0; m < 2; ++m)
    for (int mm = 0; mm < 2; ++mm)
      for (int p = 0; p < 2; ++p)
        for (int pp = 0; pp < 2; ++pp)
          k(m, mm) += std::conj(u(basis::index(m, p), basis::index(mm, pp))) * b(p, pp);
  return k;
}

inline Mat2 contract_momentum(const Mat4& u, const Mat2& a) {
  Mat2 k = Mat2::Zero();
  for (int p = 0; p < 2; ++p)
    for (int pp = 0; pp < 2; ++pp)
      for (int m = 0; m < 2; ++m)
        for (int mm = 0; mm < 2; ++mm)
          k(p, pp) += std::conj(u(basis::index(m, p), basis::index(mm, pp))) * a(m, mm);
  return k;
}

/// Unitary maximizing Re Tr[W N] and the maximum (nuclear norm of N).
inline std::pair<Mat2, double> polar_maximizer(const Mat2& n) {
  Eigen::JacobiSVD<Mat2> svd(n, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixV() * svd.matrixU().adjoint(), svd.singularValues().sum()};
}

/// min over A in U(2) of ||U - A ⊗ I||_HS^2 (closed form via the polar decomposition).
inline double min_distance_momentum_only(const Mat4& u) {
  const Mat2 k = contract_polarization(u, Mat2::Identity());
  return (u.adjoint() * u).trace().real() + 4.0 - 2.0 * polar_maximizer(k.transpose()).second;
}

/// min over A, B in U(2) of ||U - A ⊗ B||_HS^2 by alternating exact maximization
/// from several deterministic starting points.
inline double min_distance_general(const Mat4& u) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  const double base = (u.adjoint() * u).trace().real() + 4.0;
  double best_overlap = 0.0;
  for (int start = 0; start < 8; ++start) {
    Mat2 b = Mat2::Identity();
    if (start > 0) {
      Mat2 g;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) g(i, j) = cplx(normal(rng), normal(rng));
      b = polar_maximizer(g).first;
    }
    double overlap = 0.0;
    for (int it = 0; it < 500; ++it) {
      const auto [a, va] = polar_maximizer(contract_polarization(u, b).transpose());
      const auto [bn, vb] = polar_maximizer(contract_momentum(u, a).transpose());
      b = bn;
      const bool done = std::abs(vb - overlap) < 1e-15;
      overlap = vb;
      if (done) break;
    }
    best_overlap = std::max(best_overlap, overlap);
  }
  return base - 2.0 * best_overlap;
}

/// min over (u, v) of ||U - (U(u) V(phi) U(v)) ⊗ I||_HS^2: coarse lattice then Nelder-Mead.
inline double min_distance_uv(const Mat4& u, double phi, double resolution) {
  auto dist = [&](const std::array<double, 2>& x) { return hs_norm(u - factorized_operator(x[0], x[1], phi)); };
  auto dist2 = [&](const std::array<double, 2>& x) {
    const double d = dist(x);
    return d * d;
  };
  constexpr int coarse = 24;
  const double step = 2 * std::numbers::pi / coarse;
  std::array<double, 2> best{0.0, 0.0};
  double best_v = dist2(best);
  for (int i = 0; i < coarse; ++i)
    for (int j = 0; j < coarse; ++j) {
      const std::array<double, 2> x{i * step, j * step};
      const double v = dist2(x);
      if (v < best_v) {
        best_v = v;
        best = x;
      }
    }
  return std::min(best_v, opt::nelder_mead<2>(dist2, best, step / 2, resolution, 0.0, 4000).value);
}

/// max over phi in [0, 2pi) of f(phi): 64-point scan, then golden section to resolution.
template <typename F>
double maximize_over_phase(F&& f, double resolution) {
  constexpr int coarse = 64;
  const double step = 2 * std::numbers::pi / coarse;
  double best_phi = 0.0, best = f(0.0);
  for (int k = 1; k < coarse; ++k) {
    const double v = f(k * step);
    if (v > best) {
      best = v;
      best_phi = k * step;
    }
  }
  const auto r = opt::golden_section([&](double phi) { return -f(phi); }, best_phi - step, best_phi + step,
                                     resolution);
  return std::max(best, -r.value);
}

}  // namespace detail

inline MaxMinReport verify_maxmin_distance(const BsAngles& bs1, const BsAngles& bs2, double grid_resolution = 2e-3) {
  if (!(grid_resolution > 0.0)) throw input_error("grid resolution must be positive");
  MaxMinReport r;
  r.analytic = maxmin_analytic(bs1, bs2);
  r.numeric = detail::maximize_over_phase(
      [&](double phi) { return detail::min_distance_uv(detail::unitarized_mzi(bs1, bs2, phi), phi, grid_resolution); },
      grid_resolution);
  r.numeric_momentum = detail::maximize_over_phase(
      [&](double phi) { return detail::min_distance_momentum_only(detail::unitarized_mzi(bs1, bs2, phi)); },
      grid_resolution);
  r.numeric_general = detail::maximize_over_phase(
      [&](double phi) { return detail::min_distance_general(detail::unitarized_mzi(bs1, bs2, phi)); },
      grid_resolution);
  r.gap = r.numeric - r.analytic;
  r.general_gap = r.numeric_general - r.numeric;
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo soundness checks

inline constexpr double kBoundTolerance = 1e-9;

struct MonteCarloReport {
  std::uint64_t trials = 0;
  std::uint64_t violations = 0;
  double max_observed = 0.0;  ///< largest observed deviation
  double max_bound = 0.0;     ///< largest bound evaluated
  double max_ratio = 0.0;     ///< largest deviation / bound (0 when the bound is 0)
};

/// Generator for trial `index` of a run seeded with `seed`; independent of scheduling.
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Ranges for random setups: polarization contrast |alpha_V - alpha_H| up to
/// max_delta and per-element power throughput down to min_throughput.
struct RandomSetupRange {
  double max_delta = 0.3;
  double min_throughput = 0.5;
  double angle_spread = 0.35;  ///< alpha_H drawn from pi/4 +- angle_spread
};

template <typename Rng>
SetupSpec random_setup(Rng& rng, const RandomSetupRange& range = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto make_bs = [&] {
    const double ah = uniform(std::numbers::pi / 4 - range.angle_spread, std::numbers::pi / 4 + range.angle_spread);
    const double av = std::clamp(ah + uniform(-range.max_delta, range.max_delta), 0.0, std::numbers::pi / 2);
    const double gh = std::sqrt(uniform(range.min_throughput, 1.0));
    const double gv = std::sqrt(uniform(range.min_throughput, 1.0));
    return BeamSplitterSpec{gh * std::cos(ah), gh * std::sin(ah), gv * std::cos(av), gv * std::sin(av)};
  };
  SetupSpec s;
  s.bs1 = make_bs();
  s.bs2 = make_bs();
  s.mirror = {std::sqrt(uniform(range.min_throughput, 1.0)), std::sqrt(uniform(range.min_throughput, 1.0))};
  return s;
}

namespace detail {

inline void record(MonteCarloReport& rep, double observed, double bound) {
  ++rep.trials;
  rep.max_observed = std::max(rep.max_observed, observed);
  rep.max_bound = std::max(rep.max_bound, bound);
  if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, observed / bound);
  if (observed > bound + kBoundTolerance) ++rep.violations;
}

inline double max_cell_gap(const OutcomeDistribution& a, const OutcomeDistribution& b) {
  double g = 0.0;
  for (int k = 0; k < 4; ++k) g = std::max(g, std::abs(a.channel[k] - b.channel[k]));
  return g;
}

template <typename Rng>
MeasurementSetting random_setting(Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  const double phi = angle(rng);
  return {phi, angle(rng)};
}

template <typename Rng>
SettingQuad random_quad(Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  SettingQuad q;
  for (double& v : q.phi) v = angle(rng);
  for (double& v : q.theta) v = angle(rng);
  return q;
}

inline void etilde_trial(MonteCarloReport& rep, const SetupSpec& setup, std::mt19937_64& rng) {
  const DensityState state = DensityState::from_matrix(random_density_matrix(rng));
  const MeasurementSetting s = random_setting(rng);
  const BoundBundle b = compose_bounds(setup, state);
  record(rep, max_cell_gap(real_distribution(state, s, setup), normalized_real_distribution(state, s, setup)),
         b.e_tilde);
}

inline void p_bound_trial(MonteCarloReport& rep, const SetupSpec& setup, std::mt19937_64& rng) {
  const DensityState state = DensityState::from_matrix(random_density_matrix(rng));
  const MeasurementSetting s = random_setting(rng);
  const BoundBundle b = compose_bounds(setup, state);
  record(rep, max_cell_gap(real_distribution(state, s, setup), factorized_ideal_distribution(state, s, setup)),
         b.e_p);
}

inline void s_bound_trial(MonteCarloReport& rep, const SetupSpec& setup, std::mt19937_64& rng) {
  const DensityState state = DensityState::from_matrix(random_density_matrix(rng));
  const SettingQuad q = random_quad(rng);
  const BoundBundle b = compose_bounds(setup, state);
  record(rep,
         std::abs(chsh(q, state, setup, DistributionMode::real) - chsh(q, state, setup, DistributionMode::factorized)),
         b.e_s);
}

}  // namespace detail

/// Post-selected vs unitarized distribution gap against bound_etilde, for random states and settings.
inline MonteCarloReport verify_etilde_montecarlo(const SetupSpec& setup, std::uint64_t trials, std::uint64_t seed) {
  MonteCarloReport rep;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, t);
    detail::etilde_trial(rep, setup, rng);
  }
  return rep;
}

/// Cell-wise |P_real - P_factorized| against e_p, for random states and settings.
inline MonteCarloReport verify_p_bound_montecarlo(const SetupSpec& setup, std::uint64_t trials, std::uint64_t seed) {
  MonteCarloReport rep;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, t);
    detail::p_bound_trial(rep, setup, rng);
  }
  return rep;
}

/// |S_real - S_factorized| against e_s, for random states and setting quadruples.
inline MonteCarloReport verify_s_bound_montecarlo(const SetupSpec& setup, std::uint64_t trials, std::uint64_t seed) {
  MonteCarloReport rep;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, t);
    detail::s_bound_trial(rep, setup, rng);
  }
  return rep;
}

/// Same checks with a fresh random setup drawn in every trial.
enum class BoundCheck { etilde, p_bound, s_bound };

inline MonteCarloReport verify_random_setups(BoundCheck check, std::uint64_t trials, std::uint64_t seed,
                                             const RandomSetupRange& range = {}) {
  MonteCarloReport rep;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, t);
    const SetupSpec setup = random_setup(rng, range);
    switch (check) {
      case BoundCheck::etilde: detail::etilde_trial(rep, setup, rng); break;
      case BoundCheck::p_bound: detail::p_bound_trial(rep, setup, rng); break;
      case BoundCheck::s_bound: detail::s_bound_trial(rep, setup, rng); break;
    }
  }
  return rep;
}

}  // namespace spe
