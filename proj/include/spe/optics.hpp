#pragma once

// Optical elements of the generation and preparation stages and their
// composition into the Mach-Zehnder evolution operator.

#include "spe/error.hpp"
#include "spe/matcore.hpp"
#include "spe/state.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace spe {

/// Amplitude transmission/reflection coefficients, per polarization.
struct BeamSplitterSpec {
  double t_H = std::numbers::sqrt2 / 2;
  double r_H = std::numbers::sqrt2 / 2;
  double t_V = std::numbers::sqrt2 / 2;
  double r_V = std::numbers::sqrt2 / 2;

  /// Scales every coefficient by a common factor.
  [[nodiscard]] BeamSplitterSpec scaled(double gamma) const {
    return {gamma * t_H, gamma * r_H, gamma * t_V, gamma * r_V};
  }
  /// Power throughput t^2 + r^2 of the H and V channel.
  [[nodiscard]] double throughput_H() const { return t_H * t_H + r_H * r_H; }
  [[nodiscard]] double throughput_V() const { return t_V * t_V + r_V * r_V; }
};

/// Angles of the unitarized beam splitter: cos(alpha) = t~, sin(alpha) = r~.
struct BsAngles {
  double alpha_H = std::numbers::pi / 4;
  double alpha_V = std::numbers::pi / 4;

  /// alpha_V - alpha_H
  [[nodiscard]] double delta() const { return alpha_V - alpha_H; }
};

struct NormalizedBs {
  BsAngles angles;
  double c_H = 1.0;  ///< sqrt(t_H^2 + r_H^2)
  double c_V = 1.0;  ///< sqrt(t_V^2 + r_V^2)
};

/// Polarization-dependent amplitude factors of the preparation-stage mirror pair.
struct MirrorSpec {
  double eta_H = 1.0;
  double eta_V = 1.0;
};

/// Generation stage: input beam splitter, common mirror factor and phase correction xi.
struct GenerationSpec {
  double t_V0 = std::numbers::sqrt2 / 2;
  double r_V0 = std::numbers::sqrt2 / 2;
  double eta_gen = 1.0;
  double xi = std::numbers::pi / 2;
};

struct SetupSpec {
  BeamSplitterSpec bs1;
  BeamSplitterSpec bs2;
  MirrorSpec mirror;
  GenerationSpec gen;
};

namespace detail {
inline void require_coefficient(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0)
    throw input_error(std::string("coefficient ") + name + " must lie in [0,1]");
}
}  // namespace detail

inline void validate(const BeamSplitterSpec& bs) {
  detail::require_coefficient(bs.t_H, "t_H");
  detail::require_coefficient(bs.r_H, "r_H");
  detail::require_coefficient(bs.t_V, "t_V");
  detail::require_coefficient(bs.r_V, "r_V");
  constexpr double slack = 1e-12;
  if (bs.throughput_H() > 1.0 + slack || bs.throughput_V() > 1.0 + slack)
    throw input_error("beam splitter is not passive: t^2 + r^2 > 1");
  if (bs.throughput_H() <= 0.0 || bs.throughput_V() <= 0.0)
    throw input_error("beam splitter polarization channel has zero throughput");
}

inline void validate(const MirrorSpec& m) {
  for (double eta : {m.eta_H, m.eta_V})
    if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0) throw input_error("mirror factor must lie in (0,1]");
}

inline void validate(const GenerationSpec& g) {
  detail::require_coefficient(g.t_V0, "t_V0");
  detail::require_coefficient(g.r_V0, "r_V0");
  const double norm = g.t_V0 * g.t_V0 + g.r_V0 * g.r_V0;
  if (norm <= 0.0 || norm > 1.0 + 1e-12) throw input_error("generation beam splitter needs t_V0^2 + r_V0^2 in (0,1]");
  if (!std::isfinite(g.eta_gen) || g.eta_gen <= 0.0 || g.eta_gen > 1.0)
    throw input_error("generation mirror factor must lie in (0,1]");
  if (!std::isfinite(g.xi)) throw input_error("xi must be finite");
}

inline void validate(const SetupSpec& s) {
  validate(s.bs1);
  validate(s.bs2);
  validate(s.mirror);
  validate(s.gen);
}

/// Block-diagonal beam splitter matrix [[t, ir], [ir, t]] per polarization block.
inline Mat4 bs_operator(const BeamSplitterSpec& spec) {
  validate(spec);
  const cplx i(0.0, 1.0);
  Mat4 m = Mat4::Zero();
  m(0, 0) = spec.t_H;
  m(0, 1) = i * spec.r_H;
  m(1, 0) = i * spec.r_H;
  m(1, 1) = spec.t_H;
  m(2, 2) = spec.t_V;
  m(2, 3) = i * spec.r_V;
  m(3, 2) = i * spec.r_V;
  m(3, 3) = spec.t_V;
  return m;
}

inline NormalizedBs normalize_bs(const BeamSplitterSpec& spec) {
  validate(spec);
  NormalizedBs out;
  out.c_H = std::sqrt(spec.throughput_H());
  out.c_V = std::sqrt(spec.throughput_V());
  out.angles.alpha_H = std::atan2(spec.r_H / out.c_H, spec.t_H / out.c_H);
  out.angles.alpha_V = std::atan2(spec.r_V / out.c_V, spec.t_V / out.c_V);
  return out;
}

/// Ideal beam-splitter rotation [[cos u, i sin u], [i sin u, cos u]].
inline Mat2 bs_rotation(double u) {
  Mat2 m;
  m << std::cos(u), cplx(0, std::sin(u)), cplx(0, std::sin(u)), std::cos(u);
  return m;
}

/// Unitary beam splitter built from angles.
inline Mat4 bs_operator(const BsAngles& a) {
  Mat4 m = Mat4::Zero();
  m.block<2, 2>(0, 0) = bs_rotation(a.alpha_H);
  m.block<2, 2>(2, 2) = bs_rotation(a.alpha_V);
  return m;
}

/// The balanced lossless beam splitter on momentum.
inline Mat2 balanced_bs() { return bs_rotation(std::numbers::pi / 4); }

/// diag(e^{i phi}, 1)
inline Mat2 phase_operator(double phi) {
  Mat2 m = Mat2::Identity();
  m(0, 0) = std::polar(1.0, phi);
  return m;
}

/// Momentum swap produced by the mirror pair between the two beam splitters.
inline Mat2 mirror_swap() { return pauli::x(); }

/// Real rotation by theta of the (H, V) polarization basis.
inline Mat2 polarization_rotation(double theta) {
  Mat2 m;
  m << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return m;
}

/// Ideal balanced interferometer V_BS V(phi) V_BS on momentum.
inline Mat2 ideal_mzi(double phi) { return balanced_bs() * phase_operator(phi) * balanced_bs(); }

/// Second beam splitter with the mirror amplitude factors folded into each block.
inline BeamSplitterSpec mirror_rescaled_bs2(const SetupSpec& setup) {
  const auto& b = setup.bs2;
  return {setup.mirror.eta_H * b.t_H, setup.mirror.eta_H * b.r_H, setup.mirror.eta_V * b.t_V,
          setup.mirror.eta_V * b.r_V};
}

/// Normalized angles of both interferometer beam splitters (mirror factors included in the second).
struct SetupAngles {
  NormalizedBs bs1;
  NormalizedBs bs2;
};

inline SetupAngles setup_angles(const SetupSpec& setup) {
  validate(setup);
  return {normalize_bs(setup.bs1), normalize_bs(mirror_rescaled_bs2(setup))};
}

/// Interferometer operator V1 (V(phi) ⊗ I) V2. With normalized=true each beam
/// splitter is replaced by its unitarized counterpart, giving a unitary result.
inline Mat4 mzi_real_operator(const SetupSpec& setup, double phi, bool normalized) {
  validate(setup);
  const Mat4 phase = tensor(phase_operator(phi), Mat2::Identity());
  if (!normalized) return bs_operator(setup.bs1) * phase * bs_operator(mirror_rescaled_bs2(setup));
  const SetupAngles a = setup_angles(setup);
  return bs_operator(a.bs1.angles) * phase * bs_operator(a.bs2.angles);
}

/// Setup with balanced lossless polarization-independent components.
inline SetupSpec ideal_setup() { return SetupSpec{}; }

/// Block weights produced by the generation beam splitter. The common mirror
/// factor rescales t_V0 and r_V0 together and cancels.
inline std::pair<double, double> generation_weights(const GenerationSpec& gen) {
  validate(gen);
  const double t2 = gen.t_V0 * gen.t_V0;
  const double r2 = gen.r_V0 * gen.r_V0;
  return {t2 / (t2 + r2), r2 / (t2 + r2)};
}

/// Pure state sqrt(alpha)|0H> + e^{i(pi/2 - xi)} sqrt(beta)|1V>.
inline DensityState generation_state(const GenerationSpec& gen) {
  const auto [alpha, beta] = generation_weights(gen);
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  psi(basis::index(0, 0)) = std::sqrt(alpha);
  psi(basis::index(1, 1)) = std::polar(std::sqrt(beta), std::numbers::pi / 2 - gen.xi);
  return DensityState::from_matrix(psi * psi.adjoint(), 1e-12);
}

}  // namespace spe
