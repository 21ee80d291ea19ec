#pragma once

// RunConfig: the JSON configuration shared by every subcommand.

#include "spe/detmodel.hpp"
#include "spe/error.hpp"
#include "spe/io.hpp"
#include "spe/optics.hpp"
#include "spe/qprob.hpp"
#include "spe/state.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace spe {

inline constexpr const char* kConfigSchema = "spe-config/1";
inline constexpr const char* kReportSchema = "spe-report/1";
inline constexpr const char* kSequenceSchema = "spe-sequence/1";

struct RunConfig {
  SetupSpec setup;
  std::optional<SettingQuad> settings;  ///< empty: auto-optimize
  std::optional<Mat4> state;            ///< empty: state from the generation stage
  DetectorSpec detector;
  std::uint64_t n_events = 100000;
  std::uint64_t seed = 1;
  std::uint64_t trials = 10000;
  double level = 0.95;
  double grid_resolution = 2e-3;
  std::string sequence_path = "sequence.bin";
  std::string report_path;  ///< empty: standard output
};

namespace detail {

using io::json;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline BeamSplitterSpec parse_bs(const json& j) {
  BeamSplitterSpec b;
  read_opt(j, "t_H", b.t_H);
  read_opt(j, "r_H", b.r_H);
  read_opt(j, "t_V", b.t_V);
  read_opt(j, "r_V", b.r_V);
  return b;
}

inline json bs_json(const BeamSplitterSpec& b) {
  return {{"t_H", b.t_H}, {"r_H", b.r_H}, {"t_V", b.t_V}, {"r_V", b.r_V}};
}

inline Mat4 parse_matrix(const json& j) {
  const json& re = j.at("real");
  const json im = j.contains("imag") ? j.at("imag") : json();
  if (!re.is_array() || re.size() != 4) throw input_error("state.real must be a 4x4 array");
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    if (!re[r].is_array() || re[r].size() != 4) throw input_error("state.real must be a 4x4 array");
    for (int c = 0; c < 4; ++c) {
      const double imag = im.is_null() ? 0.0 : im.at(r).at(c).get<double>();
      m(r, c) = cplx(re[r][c].get<double>(), imag);
    }
  }
  return m;
}

inline json matrix_json(const Mat4& m) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < 4; ++r) {
    json rr = json::array(), ii = json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"real", re}, {"imag", im}};
}

}  // namespace detail

inline RunConfig parse_config(const io::json& j) {
  using detail::read_opt;
  RunConfig c;
  try {
    if (j.contains("schema") && j.at("schema").get<std::string>() != kConfigSchema)
      throw input_error("unsupported config schema: " + j.at("schema").get<std::string>());
    if (j.contains("setup")) {
      const auto& s = j.at("setup");
      if (s.contains("bs1")) c.setup.bs1 = detail::parse_bs(s.at("bs1"));
      if (s.contains("bs2")) c.setup.bs2 = detail::parse_bs(s.at("bs2"));
      if (s.contains("mirror")) {
        read_opt(s.at("mirror"), "eta_H", c.setup.mirror.eta_H);
        read_opt(s.at("mirror"), "eta_V", c.setup.mirror.eta_V);
      }
      if (s.contains("generation")) {
        const auto& g = s.at("generation");
        read_opt(g, "t_V0", c.setup.gen.t_V0);
        read_opt(g, "r_V0", c.setup.gen.r_V0);
        read_opt(g, "eta", c.setup.gen.eta_gen);
        read_opt(g, "xi", c.setup.gen.xi);
      }
    }
    if (j.contains("settings")) {
      const auto& s = j.at("settings");
      if (s.is_string()) {
        if (s.get<std::string>() != "auto") throw input_error("settings must be \"auto\" or {phi, theta}");
      } else {
        SettingQuad q;
        const auto& phi = s.at("phi");
        const auto& theta = s.at("theta");
        if (phi.size() != 2 || theta.size() != 2) throw input_error("settings.phi and settings.theta need two angles");
        q.phi = {phi[0].get<double>(), phi[1].get<double>()};
        q.theta = {theta[0].get<double>(), theta[1].get<double>()};
        c.settings = q;
      }
    }
    if (j.contains("state")) {
      const auto& s = j.at("state");
      if (s.is_string()) {
        if (s.get<std::string>() != "from-generation") throw input_error("state must be \"from-generation\" or a matrix");
      } else {
        c.state = detail::parse_matrix(s);
      }
    }
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      read_opt(d, "eta", c.detector.eta);
      read_opt(d, "lambda", c.detector.lambda);
      read_opt(d, "dead_time", c.detector.dead_time);
      read_opt(d, "afterpulse_prob", c.detector.afterpulse_prob);
      read_opt(d, "dcr_fraction", c.detector.dcr_fraction);
      read_opt(d, "afterpulse_window_ratio", c.detector.afterpulse_window_ratio);
      if (d.contains("epsilon")) c.detector.epsilon_override = d.at("epsilon").get<double>();
    }
    read_opt(j, "n_events", c.n_events);
    read_opt(j, "seed", c.seed);
    read_opt(j, "trials", c.trials);
    read_opt(j, "level", c.level);
    read_opt(j, "grid_resolution", c.grid_resolution);
    if (j.contains("output")) {
      read_opt(j.at("output"), "sequence", c.sequence_path);
      read_opt(j.at("output"), "report", c.report_path);
    }
  } catch (const io::json::exception& e) {
    throw input_error(std::string("malformed config: ") + e.what());
  }
  validate(c.setup);
  validate(c.detector);
  if (c.state && !is_density(*c.state)) throw input_error("configured state is not a density matrix");
  if (!(c.level > 0.0 && c.level < 1.0)) throw input_error("level must lie in (0,1)");
  if (!(c.grid_resolution > 0.0)) throw input_error("grid_resolution must be positive");
  if (c.n_events < 1) throw input_error("n_events must be at least 1");
  return c;
}

/// Fully resolved configuration, as embedded in every report.
inline io::json to_json(const RunConfig& c) {
  using io::json;
  json j;
  j["schema"] = kConfigSchema;
  j["setup"] = {{"bs1", detail::bs_json(c.setup.bs1)},
                {"bs2", detail::bs_json(c.setup.bs2)},
                {"mirror", {{"eta_H", c.setup.mirror.eta_H}, {"eta_V", c.setup.mirror.eta_V}}},
                {"generation",
                 {{"t_V0", c.setup.gen.t_V0}, {"r_V0", c.setup.gen.r_V0}, {"eta", c.setup.gen.eta_gen}, {"xi", c.setup.gen.xi}}}};
  if (c.settings)
    j["settings"] = {{"phi", {c.settings->phi[0], c.settings->phi[1]}},
                     {"theta", {c.settings->theta[0], c.settings->theta[1]}}};
  else
    j["settings"] = "auto";
  j["state"] = c.state ? detail::matrix_json(*c.state) : json("from-generation");
  json det = {{"eta", c.detector.eta},
              {"lambda", c.detector.lambda},
              {"dead_time", c.detector.dead_time},
              {"afterpulse_prob", c.detector.afterpulse_prob},
              {"dcr_fraction", c.detector.dcr_fraction},
              {"afterpulse_window_ratio", c.detector.afterpulse_window_ratio}};
  if (c.detector.epsilon_override) det["epsilon"] = *c.detector.epsilon_override;
  j["detector"] = det;
  j["n_events"] = c.n_events;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["level"] = c.level;
  j["grid_resolution"] = c.grid_resolution;
  j["output"] = {{"sequence", c.sequence_path}, {"report", c.report_path}};
  return j;
}

inline RunConfig load_config(const std::string& path) { return parse_config(io::read_json(path)); }

}  // namespace spe
