#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

namespace spe {

using cplx = std::complex<double>;

/// 2x2 operator on a single qubit (momentum or polarization).
using Mat2 = Eigen::Matrix2cd;
/// 4x4 operator on momentum ⊗ polarization.
///
/// Basis order is fixed to {|0H>, |1H>, |0V>, |1V>}: index = m + 2*p, so
/// the H block occupies rows/cols 0..1 and the V block rows/cols 2..3.
using Mat4 = Eigen::Matrix4cd;

inline constexpr double kDefaultTol = 1e-9;

namespace basis {
inline constexpr int index(int momentum, int polarization) { return momentum + 2 * polarization; }
inline constexpr int momentum_of(int idx) { return idx % 2; }
inline constexpr int polarization_of(int idx) { return idx / 2; }
}  // namespace basis

namespace pauli {
inline Mat2 identity() { return Mat2::Identity(); }
inline Mat2 x() { Mat2 m; m << 0, 1, 1, 0; return m; }
inline Mat2 y() { Mat2 m; m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline Mat2 z() { Mat2 m; m << 1, 0, 0, -1; return m; }
}  // namespace pauli

/// Kronecker product momentum ⊗ polarization in the global basis order.
inline Mat4 tensor(const Mat2& momentum, const Mat2& polarization) {
  Mat4 out;
  for (int m = 0; m < 2; ++m)
    for (int p = 0; p < 2; ++p)
      for (int mm = 0; mm < 2; ++mm)
        for (int pp = 0; pp < 2; ++pp)
          out(basis::index(m, p), basis::index(mm, pp)) = momentum(m, mm) * polarization(p, pp);
  return out;
}

/// Rank-one projector onto a basis vector of the 4-dim space.
inline Mat4 basis_projector(int idx) {
  Mat4 out = Mat4::Zero();
  out(idx, idx) = 1.0;
  return out;
}

/// Projector onto the H (polarization = 0) or V (polarization = 1) block.
inline Mat4 polarization_block_projector(int polarization) {
  Mat4 out = Mat4::Zero();
  out(basis::index(0, polarization), basis::index(0, polarization)) = 1.0;
  out(basis::index(1, polarization), basis::index(1, polarization)) = 1.0;
  return out;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Largest singular value: sqrt of the top eigenvalue of m^† m.
template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& m) {
  using Square = Eigen::Matrix<cplx, Derived::ColsAtCompileTime, Derived::ColsAtCompileTime>;
  const Square gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Square> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

/// Hilbert-Schmidt (Frobenius) norm sqrt(Tr[m^† m]).
template <typename Derived>
double hs_norm(const Eigen::MatrixBase<Derived>& m) {
  return std::sqrt((m.adjoint() * m).trace().real());
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultTol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultTol) {
  const auto n = m.rows();
  return (m.adjoint() * m - Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n))
             .cwiseAbs()
             .maxCoeff() <= tol;
}

/// Eigenvalues (ascending) of the Hermitian part of m.
template <typename Derived>
auto hermitian_eigenvalues(const Eigen::MatrixBase<Derived>& m) {
  using Square = Eigen::Matrix<cplx, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  const Square herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Square> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().eval();
}

/// Hermitian, positive semidefinite and unit trace, each within tol.
template <typename Derived>
bool is_density(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultTol) {
  if (!all_finite(m) || !is_hermitian(m, tol)) return false;
  if (std::abs(m.trace() - cplx(1.0)) > tol) return false;
  return hermitian_eigenvalues(m).minCoeff() >= -tol;
}

template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultTol) {
  return is_hermitian(m, tol) && hermitian_eigenvalues(m).minCoeff() >= -tol;
}

}  // namespace spe
