#pragma once

#include "spe/bounds.hpp"
#include "spe/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spe {

inline constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

/// Upper bound on the guessing probability for CHSH value s (clamped to |s| <= 2 sqrt 2).
inline double chsh_guessing_bound(double s) {
  const double clamped = std::clamp(s, -kTsirelson, kTsirelson);
  return 0.5 + 0.5 * std::sqrt(std::max(0.0, 2.0 - clamped * clamped / 4.0));
}

/// Min-entropy lower bound in bits certified by a CHSH value s.
inline double chsh_entropy_bound(double s) {
  if (!std::isfinite(s)) throw input_error("CHSH value must be finite");
  if (std::abs(s) > kTsirelson + 1e-9) throw numeric_error("super-Tsirelson input");
  return std::max(0.0, -std::log2(chsh_guessing_bound(s)));
}

struct Certificate {
  double s_real = 0.0;
  double e_s = 0.0;
  double e_p = 0.0;
  double s_effective = 0.0;  ///< s_real - e_s, before clamping
  double guessing_bound = 1.0;
  double min_entropy_bits = 0.0;
  bool certified = false;
  bool clamped_to_tsirelson = false;  ///< s_effective exceeded 2 sqrt 2; needs review
};

inline Certificate realistic_certificate(double s_real, const BoundBundle& bundle) {
  if (!std::isfinite(s_real)) throw input_error("CHSH value must be finite");
  if (!(bundle.e_s >= 0.0 && bundle.e_p >= 0.0 && std::isfinite(bundle.e_s) && std::isfinite(bundle.e_p)))
    throw input_error("bound bundle must hold finite nonnegative e_s and e_p");
  Certificate c;
  c.s_real = s_real;
  c.e_s = bundle.e_s;
  c.e_p = bundle.e_p;
  c.s_effective = s_real - bundle.e_s;
  c.clamped_to_tsirelson = c.s_effective > kTsirelson + 1e-9;
  const double s = std::clamp(c.s_effective, 0.0, kTsirelson);
  c.guessing_bound = std::min(1.0, chsh_guessing_bound(s) + bundle.e_p);
  c.certified = c.guessing_bound < 1.0;
  c.min_entropy_bits = c.certified ? -std::log2(c.guessing_bound) : 0.0;
  return c;
}

}  // namespace spe
