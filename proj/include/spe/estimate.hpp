#pragma once

// Maximum-likelihood recovery of channel probabilities from a correlated
// readout sequence, with p_a, epsilon and p_DCR as known calibration constants.

#include "spe/detmodel.hpp"
#include "spe/error.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace spe {

struct TransitionCounts {
  std::array<std::array<std::uint64_t, 4>, 4> n{};
  std::uint8_t first_symbol = 0;
  std::uint64_t n_total = 0;

  [[nodiscard]] std::uint64_t transitions() const {
    std::uint64_t s = 0;
    for (const auto& row : n)
      for (auto v : row) s += v;
    return s;
  }
  /// Occurrences of each symbol in the full sequence.
  [[nodiscard]] std::array<std::uint64_t, 4> symbol_counts() const {
    std::array<std::uint64_t, 4> c{};
    c[first_symbol] = 1;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) c[j] += n[i][j];
    return c;
  }
};

inline TransitionCounts count_transitions(std::span<const std::uint8_t> seq) {
  if (seq.empty()) throw input_error("empty outcome sequence");
  TransitionCounts c;
  for (auto s : seq)
    if (s > 3) throw input_error("outcome symbol out of range 0..3");
  c.first_symbol = seq[0];
  c.n_total = seq.size();
  for (std::size_t k = 1; k < seq.size(); ++k) ++c.n[seq[k - 1]][seq[k]];
  return c;
}

/// Calibration constants of the readout chain.
struct Calibration {
  double p_a = 0.0;
  double epsilon = 0.0;
  double p_dcr = 0.0;
};

/// log(p~_{x1}) + sum_ij N_ij log P_ij; -infinity when a used transition has probability 0.
inline double log_likelihood(const TransitionCounts& counts, const Prob4& p, const Calibration& cal) {
  const Prob4 q = dcr_correct(p, cal.p_dcr);
  const Eigen::Matrix4d P = transition_probabilities(q, cal.p_a, cal.epsilon);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (q[counts.first_symbol] <= 0.0) return neg_inf;
  double ll = std::log(q[counts.first_symbol]);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (counts.n[i][j] == 0) continue;
      if (P(i, j) <= 0.0) return neg_inf;
      ll += static_cast<double>(counts.n[i][j]) * std::log(P(i, j));
    }
  return ll;
}

inline double log_likelihood(const TransitionCounts& counts, const Prob4& p, double p_a, double epsilon) {
  return log_likelihood(counts, p, Calibration{p_a, epsilon, 0.0});
}

inline constexpr double kInitialFloor = 1e-6;

/// Symbol frequencies mapped through the exact invariant-distribution inverse
/// and the dark-count correction, floored at 1e-6 per component.
inline Prob4 naive_frequency_estimate(const TransitionCounts& counts, const Calibration& cal = {}) {
  const auto sym = counts.symbol_counts();
  Prob4 f;
  double norm = 0.0;
  for (int i = 0; i < 4; ++i) {
    f[i] = std::max(static_cast<double>(sym[i]) / static_cast<double>(counts.n_total), kInitialFloor);
    norm += f[i];
  }
  for (double& v : f) v /= norm;
  Prob4 q = invert_invariant(f, cal.epsilon);
  Prob4 p;
  norm = 0.0;
  for (int i = 0; i < 4; ++i) {
    p[i] = std::max((q[i] - cal.p_dcr / 4.0) / (1.0 - cal.p_dcr), kInitialFloor);
    norm += p[i];
  }
  for (double& v : p) v /= norm;
  return p;
}

struct EstimationResult {
  Prob4 p_hat{};
  double loglik = 0.0;
  Prob4 ci_lower{};
  Prob4 ci_upper{};
  double level = 0.95;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  Prob4 naive{};
  double naive_loglik = 0.0;
};

namespace detail {

/// Simplex point from log-ratio coordinates z_i = log(p_i / p_3).
inline Prob4 from_log_ratios(const Eigen::Vector3d& z) {
  const double m = std::max(0.0, z.maxCoeff());
  Prob4 p{std::exp(z(0) - m), std::exp(z(1) - m), std::exp(z(2) - m), std::exp(-m)};
  const double s = p[0] + p[1] + p[2] + p[3];
  for (double& v : p) v /= s;
  return p;
}

inline Eigen::Vector3d to_log_ratios(const Prob4& p) {
  return {std::log(p[0] / p[3]), std::log(p[1] / p[3]), std::log(p[2] / p[3])};
}

/// Gradient of the log-likelihood with respect to the log-ratio coordinates.
inline Eigen::Vector3d log_likelihood_gradient(const TransitionCounts& counts, const Prob4& p, const Calibration& cal) {
  const Prob4 q = dcr_correct(p, cal.p_dcr);
  const Eigen::Matrix4d P = transition_probabilities(q, cal.p_a, cal.epsilon);
  const double w = 1.0 - cal.p_a;
  std::array<double, 4> dq{};
  dq[counts.first_symbol] += 1.0 / q[counts.first_symbol];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (counts.n[i][j] == 0) continue;
      const double r = static_cast<double>(counts.n[i][j]) / P(i, j);
      dq[j] += r * w * (1.0 - cal.epsilon);
      if (i == j) {
        dq[i] += r * w * cal.epsilon * 2.0 * q[i];
      } else {
        dq[j] += r * w * cal.epsilon * (1.0 + q[i]);
        dq[i] += r * w * cal.epsilon * q[j];
      }
    }
  double mean = 0.0;
  std::array<double, 4> dp{};
  for (int k = 0; k < 4; ++k) {
    dp[k] = (1.0 - cal.p_dcr) * dq[k];
    mean += dp[k] * p[k];
  }
  return {p[0] * (dp[0] - mean), p[1] * (dp[1] - mean), p[2] * (dp[2] - mean)};
}

}  // namespace detail

inline constexpr double kGradientTolerance = 1e-8;

/// Maximizes the log-likelihood over the open simplex by BFGS in log-ratio
/// coordinates. Confidence intervals are Wald intervals on logit(p_i) from the
/// observed information, mapped back through the logistic function.
inline EstimationResult mle(const TransitionCounts& counts, const Calibration& cal, double level = 0.95,
                            int max_iterations = 500) {
  if (!(level > 0.0 && level < 1.0)) throw input_error("confidence level must lie in (0,1)");
  if (counts.n_total < 2) throw input_error("need at least two events");
  EstimationResult res;
  res.level = level;
  res.naive = naive_frequency_estimate(counts, cal);
  res.naive_loglik = log_likelihood(counts, res.naive, cal);

  auto objective = [&](const Eigen::Vector3d& z) { return -log_likelihood(counts, detail::from_log_ratios(z), cal); };
  auto gradient = [&](const Eigen::Vector3d& z) {
    return Eigen::Vector3d(-detail::log_likelihood_gradient(counts, detail::from_log_ratios(z), cal));
  };

  // observed information by central differences of the analytic gradient
  auto hessian = [&](const Eigen::Vector3d& z) {
    Eigen::Matrix3d h;
    constexpr double step = 1e-5;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d zp = z, zm = z;
      zp(k) += step;
      zm(k) -= step;
      h.col(k) = (gradient(zp) - gradient(zm)) / (2 * step);
    }
    return Eigen::Matrix3d(0.5 * (h + h.transpose()));
  };

  Eigen::Vector3d z = detail::to_log_ratios(res.naive);
  double f = objective(z);
  Eigen::Vector3d g = gradient(z);
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity() / static_cast<double>(counts.n_total);
  int it = 0;
  for (; it < max_iterations && g.norm() >= kGradientTolerance; ++it) {
    Eigen::Vector3d dir = -H * g;
    if (dir.dot(g) >= 0.0) {
      H = Eigen::Matrix3d::Identity() / static_cast<double>(counts.n_total);
      dir = -H * g;
    }
    double step = 1.0;
    Eigen::Vector3d z_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      z_new = z + step * dir;
      f_new = objective(z_new);
      if (std::isfinite(f_new) && f_new < f && f_new <= f + 1e-4 * step * g.dot(dir)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Eigen::Vector3d g_new = gradient(z_new);
    const Eigen::Vector3d s = z_new - z;
    const Eigen::Vector3d y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    z = z_new;
    f = f_new;
    g = g_new;
  }
  // once the objective no longer resolves a decrease, Newton steps on the gradient
  for (; it < max_iterations && g.norm() >= kGradientTolerance; ++it) {
    Eigen::LDLT<Eigen::Matrix3d> newton(hessian(z));
    if (newton.info() != Eigen::Success || !newton.isPositive()) break;
    const Eigen::Vector3d z_new = z - newton.solve(g);
    const Eigen::Vector3d g_new = gradient(z_new);
    const double f_new = objective(z_new);
    if (!std::isfinite(f_new) || !(g_new.norm() < g.norm())) break;
    z = z_new;
    f = f_new;
    g = g_new;
  }
  res.iterations = it;
  res.gradient_norm = g.norm();
  res.converged = res.gradient_norm < kGradientTolerance;
  res.p_hat = detail::from_log_ratios(z);
  res.loglik = -f;

  const Eigen::Matrix3d info = hessian(z);
  const double zq = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  Eigen::LDLT<Eigen::Matrix3d> ldlt(info);
  const bool informative = ldlt.info() == Eigen::Success && ldlt.isPositive() && info.determinant() > 0.0;
  const Eigen::Matrix3d cov = informative ? Eigen::Matrix3d(info.inverse()) : Eigen::Matrix3d::Zero();
  for (int i = 0; i < 4; ++i) {
    const double pi = res.p_hat[i];
    if (!informative) {
      res.ci_lower[i] = 0.0;
      res.ci_upper[i] = 1.0;
      continue;
    }
    Eigen::Vector3d d;
    for (int m = 0; m < 3; ++m) d(m) = pi * ((i == m ? 1.0 : 0.0) - res.p_hat[m]) / (pi * (1.0 - pi));
    const double sd = std::sqrt(std::max(0.0, d.dot(cov * d)));
    const double eta = std::log(pi / (1.0 - pi));
    res.ci_lower[i] = std::min(pi, 1.0 / (1.0 + std::exp(-(eta - zq * sd))));
    res.ci_upper[i] = std::max(pi, 1.0 / (1.0 + std::exp(-(eta + zq * sd))));
  }
  return res;
}

inline EstimationResult mle(const TransitionCounts& counts, double p_a, double epsilon, double level = 0.95) {
  return mle(counts, Calibration{p_a, epsilon, 0.0}, level);
}

}  // namespace spe
