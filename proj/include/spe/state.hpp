#pragma once

#include "spe/error.hpp"
#include "spe/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace spe {

/// A 4x4 density matrix together with its polarization-block decomposition
///
///   rho = alpha P_H rho_H P_H + beta P_V rho_V P_V
///         + sqrt(alpha beta) (P_V p P_H + P_H p^† P_V)
///
/// where p_cross is the V<-H off-diagonal block rescaled by sqrt(alpha beta).
struct DensityState {
  Mat4 rho = Mat4::Identity() / 4.0;
  double alpha = 0.5;
  double beta = 0.5;
  Mat2 rho_H = Mat2::Identity() / 2.0;
  Mat2 rho_V = Mat2::Identity() / 2.0;
  Mat2 p_cross = Mat2::Zero();

  /// Validates rho and extracts the block decomposition.
  static DensityState from_matrix(const Mat4& rho, double tol = kDefaultTol) {
    if (!is_density(rho, tol)) throw input_error("matrix is not a valid density matrix");
    DensityState s;
    s.rho = rho;
    const Mat2 hh = rho.block<2, 2>(0, 0);
    const Mat2 vv = rho.block<2, 2>(2, 2);
    const Mat2 vh = rho.block<2, 2>(2, 0);
    s.alpha = std::clamp(hh.trace().real(), 0.0, 1.0);
    s.beta = 1.0 - s.alpha;
    s.rho_H = s.alpha > 0.0 ? Mat2(hh / s.alpha) : Mat2(Mat2::Identity() / 2.0);
    s.rho_V = s.beta > 0.0 ? Mat2(vv / s.beta) : Mat2(Mat2::Identity() / 2.0);
    const double ab = std::sqrt(s.alpha * s.beta);
    s.p_cross = ab > 0.0 ? Mat2(vh / ab) : Mat2(Mat2::Zero());
    return s;
  }

  static DensityState pure(const Eigen::Vector4cd& psi) {
    const Eigen::Vector4cd n = psi / psi.norm();
    return from_matrix(n * n.adjoint());
  }

  /// Rebuilds rho from (alpha, beta, rho_H, rho_V, p_cross).
  [[nodiscard]] Mat4 reassemble() const {
    Mat4 out = Mat4::Zero();
    const double ab = std::sqrt(alpha * beta);
    out.block<2, 2>(0, 0) = alpha * rho_H;
    out.block<2, 2>(2, 2) = beta * rho_V;
    out.block<2, 2>(2, 0) = ab * p_cross;
    out.block<2, 2>(0, 2) = ab * p_cross.adjoint();
    return out;
  }
};

/// Samples G G^† / Tr[G G^†] with G complex standard normal.
template <typename Rng>
Mat4 random_density_matrix(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat4 g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = cplx(normal(rng), normal(rng));
  const Mat4 r = g * g.adjoint();
  return r / r.trace().real();
}

}  // namespace spe
