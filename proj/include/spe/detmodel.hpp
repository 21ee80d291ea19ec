#pragma once

// Markov model of detector readouts with dead time, afterpulsing and dark counts.

#include "spe/error.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace spe {

using Prob4 = std::array<double, 4>;

struct DetectorSpec {
  double eta = 1.0;          ///< detection efficiency
  double lambda = 0.0;       ///< photon rate [1/s]
  double dead_time = 0.0;    ///< T_d [s]
  double afterpulse_prob = 0.0;
  double dcr_fraction = 0.0;
  double afterpulse_window_ratio = 1.0;  ///< T_a / T_d, informational only
  std::optional<double> epsilon_override;  ///< set when epsilon is calibrated directly

  /// Probability of one extra arrival during the dead time, eta * lambda * T_d.
  [[nodiscard]] double epsilon() const { return epsilon_override ? *epsilon_override : eta * lambda * dead_time; }
};

inline constexpr double kMaxSmallParameter = 0.05;

inline void validate(const DetectorSpec& d) {
  if (!(d.eta > 0.0 && d.eta <= 1.0)) throw input_error("detector efficiency must lie in (0,1]");
  if (!(d.lambda >= 0.0) || !(d.dead_time >= 0.0)) throw input_error("rate and dead time must be nonnegative");
  const double eps = d.epsilon();
  if (!(eps >= 0.0 && eps <= kMaxSmallParameter))
    throw input_error("epsilon = eta*lambda*T_d must lie in [0, 0.05]");
  if (!(d.afterpulse_prob >= 0.0 && d.afterpulse_prob <= kMaxSmallParameter))
    throw input_error("afterpulse probability must lie in [0, 0.05]");
  if (!(d.dcr_fraction >= 0.0 && d.dcr_fraction < 1.0)) throw input_error("dark-count fraction must lie in [0,1)");
}

inline void require_simplex(const Prob4& p, double tol = 1e-9) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw input_error("probability vector has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) throw input_error("probability vector does not sum to 1");
}

/// (1 - p_DCR) p_i + p_DCR / 4
inline Prob4 dcr_correct(const Prob4& p, double p_dcr) {
  require_simplex(p);
  if (!(p_dcr >= 0.0 && p_dcr < 1.0)) throw input_error("dark-count fraction must lie in [0,1)");
  Prob4 out;
  for (int i = 0; i < 4; ++i) out[i] = (1.0 - p_dcr) * p[i] + p_dcr / 4.0;
  return out;
}

struct MarkovDetectorModel {
  Prob4 p{};  ///< channel probabilities (already DCR-corrected)
  double p_a = 0.0;
  double epsilon = 0.0;
  Eigen::Matrix4d P = Eigen::Matrix4d::Zero();

  /// Matrix of repeated draws: every row equals p.
  [[nodiscard]] Eigen::Matrix4d iid_part() const {
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = p[j];
    return m;
  }
  /// One arrival during the dead time: q_ii = p_i^2, q_ij = p_j (1 + p_i).
  [[nodiscard]] Eigen::Matrix4d dead_time_part() const {
    Eigen::Matrix4d q;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) q(i, j) = i == j ? p[j] * p[j] : p[j] * (1.0 + p[i]);
    return q;
  }
  /// p_a I + (1 - p_a)((1 - eps) P~ + eps Q)
  [[nodiscard]] Eigen::Matrix4d reassemble() const {
    return p_a * Eigen::Matrix4d::Identity() + (1.0 - p_a) * ((1.0 - epsilon) * iid_part() + epsilon * dead_time_part());
  }
};

/// P_ij = p_a delta_ij + (1 - p_a)((1 - eps) p_j + eps q_ij), without validation.
inline Eigen::Matrix4d transition_probabilities(const Prob4& p, double p_a, double epsilon) {
  Eigen::Matrix4d P;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double q = i == j ? p[j] * p[j] : p[j] + p[i] * p[j];
      P(i, j) = (i == j ? p_a : 0.0) + (1.0 - p_a) * ((1.0 - epsilon) * p[j] + epsilon * q);
    }
  return P;
}

inline MarkovDetectorModel transition_matrix(const Prob4& p, double p_a, double epsilon) {
  require_simplex(p);
  if (std::any_of(p.begin(), p.end(), [](double v) { return v <= 0.0; })) throw numeric_error("reducible chain");
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw input_error("afterpulse probability must lie in [0,1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw input_error("epsilon must lie in [0,1]");
  MarkovDetectorModel m;
  m.p = p;
  m.p_a = p_a;
  m.epsilon = epsilon;
  m.P = transition_probabilities(p, p_a, epsilon);
  return m;
}

struct InvariantDistribution {
  Prob4 closed_form{};
  Prob4 numeric{};
  int iterations = 0;
};

/// f_i = (p_i / (1 + eps p_i)) / sum_j p_j / (1 + eps p_j)
inline Prob4 invariant_closed_form(const Prob4& p, double epsilon) {
  Prob4 f;
  double norm = 0.0;
  for (int i = 0; i < 4; ++i) {
    f[i] = p[i] / (1.0 + epsilon * p[i]);
    norm += f[i];
  }
  for (double& v : f) v /= norm;
  return f;
}

/// Closed form plus the left eigenvector of P from power iteration.
inline InvariantDistribution invariant_distribution(const MarkovDetectorModel& model) {
  InvariantDistribution out;
  out.closed_form = invariant_closed_form(model.p, model.epsilon);
  Eigen::RowVector4d v = Eigen::RowVector4d::Constant(0.25);
  constexpr int kMaxIterations = 100000;
  for (; out.iterations < kMaxIterations; ++out.iterations) {
    Eigen::RowVector4d next = v * model.P;
    next /= next.sum();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change < 1e-15) break;
  }
  for (int i = 0; i < 4; ++i) out.numeric[i] = v(i);
  return out;
}

/// Exact inverse of the closed-form invariant distribution:
/// p_i = f_i / (c - eps f_i), with c the root of sum_i p_i = 1.
inline Prob4 invert_invariant(const Prob4& f, double epsilon) {
  require_simplex(f);
  if (std::any_of(f.begin(), f.end(), [](double v) { return v <= 0.0; }))
    throw input_error("invariant distribution must be strictly positive");
  if (!(epsilon >= 0.0)) throw input_error("epsilon must be nonnegative");
  if (epsilon == 0.0) return f;

  auto excess = [&](double c) {
    double s = 0.0;
    for (double fi : f) s += fi / (c - epsilon * fi);
    return s - 1.0;
  };
  const double f_max = *std::max_element(f.begin(), f.end());
  double lo = f_max * (1.0 + epsilon);
  double hi = 1.0 + epsilon;
  const double g_lo = excess(lo), g_hi = excess(hi);
  if (g_lo < 0.0 || g_hi > 0.0) throw numeric_error("invert_invariant: root not bracketed");
  double c = hi;
  if (g_hi != 0.0 && g_lo != 0.0) {
    std::uintmax_t max_iter = 200;
    const auto root = boost::math::tools::toms748_solve(excess, lo, hi, g_lo, g_hi,
                                                        boost::math::tools::eps_tolerance<double>(52), max_iter);
    c = 0.5 * (root.first + root.second);
  } else if (g_lo == 0.0) {
    c = lo;
  }
  Prob4 p;
  double norm = 0.0;
  for (int i = 0; i < 4; ++i) {
    p[i] = f[i] / (c - epsilon * f[i]);
    norm += p[i];
  }
  for (double& v : p) v /= norm;
  return p;
}

/// First-order inversions of the invariant distribution, kept as diagnostics.
/// `expanded` is the O(eps) Taylor inverse f_i (1 + eps (f_i - sum f^2));
/// `printed_sign` uses + sum f^2, which does not invert the closed form.
enum class FirstOrderVariant { expanded, printed_sign };

inline Prob4 first_order_inversion(const Prob4& f, double epsilon, FirstOrderVariant variant) {
  double sum_sq = 0.0;
  for (double v : f) sum_sq += v * v;
  const double sign = variant == FirstOrderVariant::expanded ? -1.0 : 1.0;
  Prob4 p;
  for (int i = 0; i < 4; ++i) p[i] = f[i] * (1.0 + epsilon * (f[i] + sign * sum_sq));
  return p;
}

using OutcomeSequence = std::vector<std::uint8_t>;

namespace detail {
/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint8_t sample_row(const std::array<double, 4>& cumulative, double u) {
  for (std::uint8_t k = 0; k < 3; ++k)
    if (u < cumulative[k]) return k;
  return 3;
}
}  // namespace detail

/// Seeded realization of the chain. The first symbol is drawn from `initial`
/// (default: the model's channel probabilities).
inline OutcomeSequence simulate(const MarkovDetectorModel& model, std::size_t n_events, std::uint64_t seed,
                                const std::optional<Prob4>& initial = std::nullopt) {
  if (n_events < 1) throw input_error("n_events must be at least 1");
  const Prob4 init = initial.value_or(model.p);
  require_simplex(init);
  auto cumulate = [](auto&& row) {
    std::array<double, 4> c{};
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) c[k] = (acc += row(k));
    return c;
  };
  const auto init_cum = cumulate([&](int k) { return init[k]; });
  std::array<std::array<double, 4>, 4> rows;
  for (int i = 0; i < 4; ++i) rows[i] = cumulate([&](int k) { return model.P(i, k); });

  std::mt19937_64 rng(seed);
  OutcomeSequence seq(n_events);
  seq[0] = detail::sample_row(init_cum, detail::unit_draw(rng));
  for (std::size_t n = 1; n < n_events; ++n) seq[n] = detail::sample_row(rows[seq[n - 1]], detail::unit_draw(rng));
  return seq;
}

}  // namespace spe
