#pragma once

// Subcommand orchestration. Every command returns a JSON report (with the
// resolved config and schema string embedded) and a process exit status.

#include "spe/bounds.hpp"
#include "spe/certify.hpp"
#include "spe/config.hpp"
#include "spe/detmodel.hpp"
#include "spe/estimate.hpp"
#include "spe/io.hpp"
#include "spe/qprob.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spe {

struct CommandResult {
  io::json report;
  int exit_code = 0;
  std::vector<std::string> warnings;
};

inline constexpr double kMaxMinTolerance = 1e-2;
inline constexpr std::uint64_t kSoftMinimumEvents = 1000;

inline DensityState resolved_state(const RunConfig& c) {
  return c.state ? DensityState::from_matrix(*c.state) : generation_state(c.setup.gen);
}

inline BoundBundle resolved_bounds(const RunConfig& c) {
  return c.state ? compose_bounds(c.setup, DensityState::from_matrix(*c.state)) : compose_bounds(c.setup);
}

inline Calibration calibration_of(const DetectorSpec& d) { return {d.afterpulse_prob, d.epsilon(), d.dcr_fraction}; }

/// Channel probabilities fed to the detector chain: real distribution, then dark counts.
inline Prob4 channel_input(const RunConfig& c, const DensityState& state, const MeasurementSetting& s) {
  const OutcomeDistribution d = real_distribution(state, s, c.setup);
  Prob4 p{d.channel[0], d.channel[1], d.channel[2], d.channel[3]};
  return p;
}

/// E = d(++) + d(--) - d(+-) - d(-+) with channel index m + 2p.
inline double correlation_of(const Prob4& p) { return p[0] + p[3] - p[1] - p[2]; }

namespace detail {

inline io::json prob_json(const Prob4& p) { return io::json::array({p[0], p[1], p[2], p[3]}); }

inline io::json bundle_json(const BoundBundle& b) {
  return {{"e", b.e},          {"r1", b.r1_norm}, {"r2", b.r2_norm},    {"e_tilde", b.e_tilde},
          {"e_p", b.e_p},      {"e_s", b.e_s},    {"c_H", b.c_H},       {"c_V", b.c_V},
          {"alpha", b.alpha},  {"beta", b.beta},  {"weight_source", std::string(to_string(b.weights))}};
}

inline io::json angles_json(const SetupAngles& a) {
  return {{"bs1", {{"alpha_H", a.bs1.angles.alpha_H}, {"alpha_V", a.bs1.angles.alpha_V}, {"c_H", a.bs1.c_H}, {"c_V", a.bs1.c_V}}},
          {"bs2", {{"alpha_H", a.bs2.angles.alpha_H}, {"alpha_V", a.bs2.angles.alpha_V}, {"c_H", a.bs2.c_H}, {"c_V", a.bs2.c_V}}}};
}

inline io::json quad_json(const SettingQuad& q) {
  return {{"phi", {q.phi[0], q.phi[1]}}, {"theta", {q.theta[0], q.theta[1]}}};
}

inline io::json certificate_json(const Certificate& c) {
  return {{"s_real", c.s_real},
          {"e_s", c.e_s},
          {"e_p", c.e_p},
          {"s_effective", c.s_effective},
          {"guessing_bound", c.guessing_bound},
          {"min_entropy_bits", c.min_entropy_bits},
          {"certified", c.certified},
          {"clamped_to_tsirelson", c.clamped_to_tsirelson}};
}

inline io::json estimation_json(const EstimationResult& r) {
  return {{"p_hat", prob_json(r.p_hat)},
          {"loglik", r.loglik},
          {"ci_lower", prob_json(r.ci_lower)},
          {"ci_upper", prob_json(r.ci_upper)},
          {"level", r.level},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"gradient_norm", r.gradient_norm},
          {"naive", prob_json(r.naive)},
          {"naive_loglik", r.naive_loglik}};
}

inline io::json montecarlo_json(const MonteCarloReport& r) {
  return {{"trials", r.trials},
          {"violations", r.violations},
          {"max_observed", r.max_observed},
          {"max_bound", r.max_bound},
          {"max_ratio", r.max_ratio}};
}

inline io::json envelope(const char* command, const RunConfig& c) {
  io::json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["config"] = to_json(c);
  return j;
}

inline std::string sidecar_path(const std::string& sequence_path) { return sequence_path + ".json"; }

/// Per-pair seed for data-driven certification.
inline std::uint64_t pair_seed(std::uint64_t seed, int i, int j) {
  auto rng = trial_rng(seed, static_cast<std::uint64_t>(2 * i + j));
  return rng();
}

}  // namespace detail

inline CommandResult cmd_bounds(const RunConfig& c) {
  CommandResult out;
  out.report = detail::envelope("bounds", c);
  out.report["angles"] = detail::angles_json(setup_angles(c.setup));
  out.report["bounds"] = detail::bundle_json(resolved_bounds(c));
  return out;
}

struct CertifyOptions {
  bool from_data = false;  ///< estimate S from simulated, detector-distorted sequences
};

inline CommandResult cmd_certify(const RunConfig& c, const CertifyOptions& opts = {}) {
  CommandResult out;
  out.report = detail::envelope("certify", c);
  const DensityState state = resolved_state(c);
  const BoundBundle bundle = resolved_bounds(c);

  SettingQuad q;
  if (c.settings) {
    q = *c.settings;
    out.report["settings_source"] = "configured";
  } else {
    q = optimize_chsh(state, c.setup, DistributionMode::real).settings;
    out.report["settings_source"] = "optimized";
  }
  out.report["settings"] = detail::quad_json(q);

  double s_real = chsh(q, state, c.setup, DistributionMode::real);
  out.report["s_real_model"] = s_real;
  if (opts.from_data) {
    const Calibration cal = calibration_of(c.detector);
    io::json pairs = io::json::array();
    double s_data = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const Prob4 p = channel_input(c, state, q.pair(i, j));
        const auto model = transition_matrix(dcr_correct(p, cal.p_dcr), cal.p_a, cal.epsilon);
        const std::uint64_t seed = detail::pair_seed(c.seed, i, j);
        const auto seq = simulate(model, c.n_events, seed);
        const EstimationResult r = mle(count_transitions(seq), cal, c.level);
        if (!r.converged) out.warnings.push_back("estimator did not converge for a setting pair");
        const double e = correlation_of(r.p_hat);
        s_data += chsh_sign(i, j) * e;
        pairs.push_back({{"pair", {i, j}},
                         {"seed", seed},
                         {"p_true", detail::prob_json(p)},
                         {"estimate", detail::estimation_json(r)},
                         {"correlation", e}});
      }
    out.report["data"] = {{"pairs", pairs}, {"s_estimated", s_data}};
    s_real = s_data;
  }
  const Certificate cert = realistic_certificate(s_real, bundle);
  if (cert.clamped_to_tsirelson) out.warnings.push_back("effective CHSH value exceeds 2 sqrt 2; clamped");
  out.report["s_source"] = opts.from_data ? "data" : "model";
  out.report["bounds"] = detail::bundle_json(bundle);
  out.report["certificate"] = detail::certificate_json(cert);
  out.exit_code = cert.certified ? 0 : 1;
  return out;
}

/// Writes the sequence to c.sequence_path and a sidecar JSON next to it.
inline CommandResult cmd_simulate(const RunConfig& c) {
  CommandResult out;
  out.report = detail::envelope("simulate", c);
  const DensityState state = resolved_state(c);
  const SettingQuad q = c.settings ? *c.settings : optimize_chsh(state, c.setup, DistributionMode::real).settings;
  const Calibration cal = calibration_of(c.detector);
  const Prob4 p = channel_input(c, state, q.pair(0, 0));
  const Prob4 p_tilde = dcr_correct(p, cal.p_dcr);
  const auto model = transition_matrix(p_tilde, cal.p_a, cal.epsilon);
  const auto seq = simulate(model, c.n_events, c.seed);
  io::write_sequence(c.sequence_path, seq);

  io::json meta;
  meta["schema"] = kSequenceSchema;
  meta["p"] = detail::prob_json(p);
  meta["p_tilde"] = detail::prob_json(p_tilde);
  meta["p_a"] = cal.p_a;
  meta["epsilon"] = cal.epsilon;
  meta["p_dcr"] = cal.p_dcr;
  meta["seed"] = c.seed;
  meta["n"] = c.n_events;
  meta["setting"] = {{"phi", q.phi[0]}, {"theta", q.theta[0]}};
  io::write_json(detail::sidecar_path(c.sequence_path), meta);

  out.report["sequence"] = c.sequence_path;
  out.report["sidecar"] = detail::sidecar_path(c.sequence_path);
  out.report["metadata"] = meta;
  out.report["invariant"] = detail::prob_json(invariant_closed_form(p_tilde, cal.epsilon));
  return out;
}

inline CommandResult cmd_estimate(const RunConfig& c, const std::string& sequence_path) {
  CommandResult out;
  out.report = detail::envelope("estimate", c);
  const Calibration cal = calibration_of(c.detector);
  const auto seq = io::read_sequence(sequence_path);
  if (seq.size() < kSoftMinimumEvents) out.warnings.push_back("sequence shorter than 1000 events; intervals are unreliable");
  const TransitionCounts counts = count_transitions(seq);
  const EstimationResult r = mle(counts, cal, c.level);
  if (!r.converged) out.warnings.push_back("estimator did not converge");

  out.report["sequence"] = sequence_path;
  out.report["n"] = counts.n_total;
  out.report["calibration"] = {{"p_a", cal.p_a}, {"epsilon", cal.epsilon}, {"p_dcr", cal.p_dcr}};
  out.report["estimate"] = detail::estimation_json(r);

  const std::string sidecar = detail::sidecar_path(sequence_path);
  if (std::filesystem::exists(sidecar)) {
    const io::json meta = io::read_json(sidecar);
    Prob4 ref{};
    for (int i = 0; i < 4; ++i) ref[i] = meta.at("p").at(i).get<double>();
    io::json covered = io::json::array();
    bool all = true;
    for (int i = 0; i < 4; ++i) {
      const bool in = r.ci_lower[i] <= ref[i] && ref[i] <= r.ci_upper[i];
      covered.push_back(in);
      all = all && in;
    }
    out.report["reference"] = {{"p", detail::prob_json(ref)}, {"covered", covered}, {"all_covered", all}};
  }
  out.exit_code = r.converged ? 0 : 1;
  return out;
}

inline CommandResult cmd_verify(const RunConfig& c) {
  CommandResult out;
  out.report = detail::envelope("verify", c);
  const SetupAngles a = setup_angles(c.setup);
  const MaxMinReport app = verify_maxmin_distance(a.bs1.angles, a.bs2.angles, c.grid_resolution);
  const MonteCarloReport et = verify_etilde_montecarlo(c.setup, c.trials, c.seed);
  const MonteCarloReport pb = verify_p_bound_montecarlo(c.setup, c.trials, c.seed);
  const MonteCarloReport sb = verify_s_bound_montecarlo(c.setup, c.trials, c.seed);

  const bool maxmin_ok = std::abs(app.gap) <= kMaxMinTolerance && std::abs(app.general_gap) <= kMaxMinTolerance;
  const std::uint64_t violations = et.violations + pb.violations + sb.violations;
  out.report["maxmin_distance"] = {{"analytic", app.analytic},
                              {"numeric", app.numeric},
                              {"numeric_momentum", app.numeric_momentum},
                              {"numeric_general", app.numeric_general},
                              {"gap", app.gap},
                              {"general_gap", app.general_gap},
                              {"tolerance", kMaxMinTolerance},
                              {"pass", maxmin_ok}};
  out.report["etilde"] = detail::montecarlo_json(et);
  out.report["p_bound"] = detail::montecarlo_json(pb);
  out.report["s_bound"] = detail::montecarlo_json(sb);
  out.report["violations"] = violations;
  out.report["tolerance"] = kBoundTolerance;
  out.exit_code = (violations == 0 && maxmin_ok) ? 0 : 1;
  return out;
}

}  // namespace spe
