#include "spe/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<double> level;
  std::string out;
  std::string sequence;
  bool from_data = false;
};

spe::RunConfig resolve(const Overrides& o) {
  spe::RunConfig c = o.config_path.empty() ? spe::parse_config(spe::io::json::object()) : spe::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  if (o.level) {
    if (!(*o.level > 0.0 && *o.level < 1.0)) throw spe::input_error("--level must lie in (0,1)");
    c.level = *o.level;
  }
  return c;
}

int emit(const spe::CommandResult& r, const std::string& report_path) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  if (report_path.empty())
    std::cout << spe::io::dump(r.report) << '\n';
  else
    spe::io::write_json(report_path, r.report);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-testing QRNG toolkit: bounds, certification, detector simulation and estimation"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed (overrides the config)");
    sub->add_option("--level", o.level, "Confidence level in (0,1)");
  };

  auto* bounds = app.add_subcommand("bounds", "Error bounds e, r1, r2, e~, e_p, e_s for the configured setup");
  auto* certify = app.add_subcommand("certify", "Min-entropy certificate; exit status 0 iff certified");
  auto* simulate = app.add_subcommand("simulate", "Write a detector-distorted outcome sequence and sidecar");
  auto* estimate = app.add_subcommand("estimate", "Maximum-likelihood channel probabilities from a sequence");
  auto* verify = app.add_subcommand("verify", "Numeric checks of the bounds; exit status 0 iff zero violations");
  for (auto* sub : {bounds, certify, simulate, estimate, verify}) common(sub);

  for (auto* sub : {bounds, certify, estimate, verify}) sub->add_option("--out", o.out, "Report path (default: stdout)");
  simulate->add_option("--out", o.out, "Sequence path (sidecar is written to <out>.json)");
  certify->add_flag("--from-data", o.from_data, "Estimate S from simulated sequences instead of the model");
  estimate->add_option("--sequence", o.sequence, "Sequence file")->required()->check(CLI::ExistingFile);
  verify->add_option("--trials", o.trials, "Monte Carlo trials per check");

  CLI11_PARSE(app, argc, argv);

  try {
    spe::RunConfig c = resolve(o);
    const std::string report_path = o.out.empty() ? c.report_path : o.out;
    if (*bounds) return emit(spe::cmd_bounds(c), report_path);
    if (*certify) return emit(spe::cmd_certify(c, {o.from_data}), report_path);
    if (*simulate) {
      if (!o.out.empty()) c.sequence_path = o.out;
      return emit(spe::cmd_simulate(c), c.report_path);
    }
    if (*estimate) return emit(spe::cmd_estimate(c, o.sequence), report_path);
    if (*verify) return emit(spe::cmd_verify(c), report_path);
  } catch (const spe::input_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spe::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
