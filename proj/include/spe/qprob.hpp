#pragma once

// Outcome distributions of the four detection channels, correlation
// coefficients and the CHSH parameter.

#include "spe/error.hpp"
#include "spe/matcore.hpp"
#include "spe/optics.hpp"
#include "spe/optimize.hpp"
#include "spe/state.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

namespace spe {

/// Interferometer phase phi and polarization rotation theta.
struct MeasurementSetting {
  double phi = 0.0;
  double theta = 0.0;
};

/// Probabilities of the four detector channels.
///
/// Channel index equals the basis index m + 2p; outcome labels are
/// momentum 0 -> x=+1, 1 -> x=-1 and H -> y=+1, V -> y=-1.
struct OutcomeDistribution {
  std::array<double, 4> channel{};

  static constexpr int channel_of(int x, int y) { return basis::index(x > 0 ? 0 : 1, y > 0 ? 0 : 1); }

  [[nodiscard]] double prob(int x, int y) const { return channel[channel_of(x, y)]; }
  [[nodiscard]] double total() const { return channel[0] + channel[1] + channel[2] + channel[3]; }
};

inline constexpr double kExtinctionThreshold = 1e-15;

namespace detail {

/// Diagonal of U rho U^†, optionally normalized by its trace.
inline OutcomeDistribution channel_probabilities(const Mat4& u, const Mat4& rho, bool postselect) {
  const Mat4 out = u * rho * u.adjoint();
  OutcomeDistribution d;
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    d.channel[k] = std::max(0.0, out(k, k).real());
    total += d.channel[k];
  }
  if (postselect) {
    if (!(total > kExtinctionThreshold)) throw numeric_error("all photons lost");
    for (double& p : d.channel) p /= total;
  }
  return d;
}

inline Mat4 polarization_stage(double theta) { return tensor(Mat2::Identity(), polarization_rotation(theta)); }

}  // namespace detail

/// Balanced lossless interferometer followed by the polarization rotation.
inline OutcomeDistribution ideal_distribution(const DensityState& state, const MeasurementSetting& s) {
  const Mat4 u = tensor(ideal_mzi(s.phi), polarization_rotation(s.theta));
  return detail::channel_probabilities(u, state.rho, false);
}

/// Post-selected distribution of the lossy, polarization-dependent setup.
inline OutcomeDistribution real_distribution(const DensityState& state, const MeasurementSetting& s,
                                             const SetupSpec& setup) {
  const Mat4 u = detail::polarization_stage(s.theta) * mzi_real_operator(setup, s.phi, false);
  return detail::channel_probabilities(u, state.rho, true);
}

/// Distribution under the unitarized beam splitters.
inline OutcomeDistribution normalized_real_distribution(const DensityState& state, const MeasurementSetting& s,
                                                        const SetupSpec& setup) {
  const Mat4 u = detail::polarization_stage(s.theta) * mzi_real_operator(setup, s.phi, true);
  return detail::channel_probabilities(u, state.rho, false);
}

/// Closed-form optimum (u0, v0) of the product-form interferometer closest in
/// Hilbert-Schmidt norm to the unitarized one.
struct Factorization {
  double u = std::numbers::pi / 4;
  double v = std::numbers::pi / 4;
};

inline Factorization optimal_factorization(const SetupSpec& setup) {
  const SetupAngles a = setup_angles(setup);
  return {(a.bs1.angles.alpha_H + a.bs1.angles.alpha_V) / 2, (a.bs2.angles.alpha_H + a.bs2.angles.alpha_V) / 2};
}

/// Product-form interferometer (U(u) V(phi) U(v)) ⊗ I.
inline Mat4 factorized_operator(double u, double v, double phi) {
  return tensor(bs_rotation(u) * phase_operator(phi) * bs_rotation(v), Mat2::Identity());
}

inline OutcomeDistribution factorized_ideal_distribution(const DensityState& state, const MeasurementSetting& s,
                                                         const SetupSpec& setup) {
  const Factorization f = optimal_factorization(setup);
  const Mat4 u = detail::polarization_stage(s.theta) * factorized_operator(f.u, f.v, s.phi);
  return detail::channel_probabilities(u, state.rho, false);
}

/// d(+,+) + d(-,-) - d(+,-) - d(-,+)
inline double correlation(const OutcomeDistribution& d) {
  return d.prob(+1, +1) + d.prob(-1, -1) - d.prob(+1, -1) - d.prob(-1, +1);
}

enum class DistributionMode { ideal, real, normalized, factorized };

inline std::string_view to_string(DistributionMode m) {
  switch (m) {
    case DistributionMode::ideal: return "ideal";
    case DistributionMode::real: return "real";
    case DistributionMode::normalized: return "normalized";
    case DistributionMode::factorized: return "factorized";
  }
  return "?";
}

inline OutcomeDistribution distribution(DistributionMode mode, const DensityState& state,
                                        const MeasurementSetting& s, const SetupSpec& setup) {
  switch (mode) {
    case DistributionMode::ideal: return ideal_distribution(state, s);
    case DistributionMode::real: return real_distribution(state, s, setup);
    case DistributionMode::normalized: return normalized_real_distribution(state, s, setup);
    case DistributionMode::factorized: return factorized_ideal_distribution(state, s, setup);
  }
  throw input_error("unknown distribution mode");
}

/// Two interferometer phases and two polarization rotations; pair (i, j) is (phi_i, theta_j).
struct SettingQuad {
  std::array<double, 2> phi{};
  std::array<double, 2> theta{};

  [[nodiscard]] MeasurementSetting pair(int i, int j) const { return {phi[i], theta[j]}; }
};

/// CHSH sign pattern: only the (1,1) term enters with a minus sign.
inline constexpr double chsh_sign(int i, int j) { return (i == 1 && j == 1) ? -1.0 : 1.0; }

inline double chsh(const SettingQuad& q, const DensityState& state, const SetupSpec& setup,
                   DistributionMode mode) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += chsh_sign(i, j) * correlation(distribution(mode, state, q.pair(i, j), setup));
  return s;
}

struct ChshOptimum {
  SettingQuad settings;
  double s = 0.0;
};

/// Maximizes S over (phi0, phi1, theta0, theta1): exhaustive scan of a
/// correlation table on a grid_points^2 lattice, then Nelder-Mead refinement.
/// Ties in the scan resolve to the lexicographically first angle quadruple.
inline ChshOptimum optimize_chsh(const DensityState& state, const SetupSpec& setup, DistributionMode mode,
                                 int grid_points = 48, double xtol = 1e-9) {
  const double step = 2 * std::numbers::pi / grid_points;
  const auto g = static_cast<std::size_t>(grid_points);
  std::vector<double> table(g * g);
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b)
      table[a * g + b] = correlation(distribution(mode, state, {a * step, b * step}, setup));

  double best = -1e300;
  std::array<std::size_t, 4> arg{};
  for (std::size_t a0 = 0; a0 < g; ++a0)
    for (std::size_t a1 = 0; a1 < g; ++a1)
      for (std::size_t b0 = 0; b0 < g; ++b0) {
        const double partial = table[a0 * g + b0] + table[a1 * g + b0];
        for (std::size_t b1 = 0; b1 < g; ++b1) {
          const double v = partial + table[a0 * g + b1] - table[a1 * g + b1];
          if (v > best) {
            best = v;
            arg = {a0, a1, b0, b1};
          }
        }
      }

  auto negative_s = [&](const std::array<double, 4>& x) {
    return -chsh(SettingQuad{{x[0], x[1]}, {x[2], x[3]}}, state, setup, mode);
  };
  const std::array<double, 4> x0{arg[0] * step, arg[1] * step, arg[2] * step, arg[3] * step};
  const auto r = opt::nelder_mead<4>(negative_s, x0, step / 2, xtol);
  ChshOptimum out;
  if (-r.value >= best) {
    out.settings = SettingQuad{{r.x[0], r.x[1]}, {r.x[2], r.x[3]}};
    out.s = -r.value;
  } else {
    out.settings = SettingQuad{{x0[0], x0[1]}, {x0[2], x0[3]}};
    out.s = best;
  }
  return out;
}

}  // namespace spe
