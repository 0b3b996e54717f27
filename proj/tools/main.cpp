// Command-line driver: bdgeom <mode> [--config file.json] [flags]
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 invalid configuration.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bdgeom/errors.hpp"
#include "bdgeom/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> n;
  std::optional<double> gamma;
  std::optional<double> radius;
  std::optional<int> dim;
  std::optional<double> horizon;
  std::optional<std::string> functional;
  std::optional<std::size_t> replications;
  std::optional<double> sample_step;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;
  std::optional<int> l_max;
  std::optional<std::size_t> mc_samples;
  bool quiet = false;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file");
  cmd->add_option("--seed", o.seed, "Root seed (overrides BD_GEOM_SEED and the file)");
  cmd->add_option("--n", o.n, "Birth rate / expected point count");
  cmd->add_option("--gamma", o.gamma, "Target n r^d");
  cmd->add_option("--radius", o.radius, "Explicit interaction radius (used when gamma is unset)");
  cmd->add_option("--dim", o.dim, "Spatial dimension");
  cmd->add_option("--horizon", o.horizon, "Simulated time T");
  cmd->add_option("-f,--functional", o.functional, "Selector such as clique:3:balls");
  cmd->add_option("-r,--replications", o.replications, "Independent replications");
  cmd->add_option("--step", o.sample_step, "Sample-time spacing");
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("-j,--jobs", o.jobs, "Worker threads");
  cmd->add_option("--l-max", o.l_max, "Truncation order for exclusive weights");
  cmd->add_option("--mc-samples", o.mc_samples, "Monte Carlo samples per integral");
  cmd->add_flag("-q,--quiet", o.quiet, "Only print the verdict line");
}

bdgeom::ExperimentSpec resolve(bdgeom::Mode mode, const Overrides& o) {
  bdgeom::ExperimentSpec spec;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw bdgeom::ConfigError("cannot read config '" + o.config + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    spec = bdgeom::spec_from_json(buf.str());
  }
  spec.mode = mode;
  if (const char* env = std::getenv("BD_GEOM_SEED"); env && *env) {
    try {
      spec.simulation.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw bdgeom::ConfigError("BD_GEOM_SEED is not an unsigned integer");
    }
  }
  if (o.seed) spec.simulation.seed = *o.seed;
  if (o.n) spec.simulation.n = *o.n;
  if (o.gamma) spec.simulation.gamma = *o.gamma;
  if (o.radius) {
    spec.simulation.radius = *o.radius;
    if (!o.gamma) spec.simulation.gamma.reset();
  }
  if (o.dim) spec.simulation.dim = *o.dim;
  if (o.horizon) spec.simulation.horizon = *o.horizon;
  if (o.functional) spec.functional = *o.functional;
  if (o.replications) spec.replications = *o.replications;
  if (o.sample_step) {
    spec.sample_step = *o.sample_step;
    spec.sample_times.clear();
  }
  if (o.out) spec.output_dir = *o.out;
  if (o.jobs) spec.jobs = *o.jobs;
  if (o.l_max) spec.l_max = *o.l_max;
  if (o.mc_samples) spec.budget.samples = *o.mc_samples;
  if (!spec.simulation.gamma && !spec.simulation.radius) spec.simulation.gamma = 1.0;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial birth-death geometric statistics"};
  app.require_subcommand(1);
  Overrides overrides;
  std::optional<bdgeom::Mode> chosen;
  const std::pair<const char*, const char*> modes[] = {
      {"simulate", "Sample paths of the tracked statistic"},
      {"theory", "Limiting covariance model"},
      {"covariance", "Empirical vs limiting covariance"},
      {"gaussianity", "Kolmogorov distance of the standardized statistic"},
      {"oracle", "Generalized Mecke identity battery"},
      {"euler", "Morse critical-point Euler check"},
      {"full", "Every acceptance criterion"},
  };
  for (const auto& [name, help] : modes) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_flags(cmd, overrides);
    cmd->callback([&chosen, mode = bdgeom::parse_mode(name)] { chosen = mode; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const bdgeom::ExperimentSpec spec = resolve(*chosen, overrides);
    const bdgeom::ExperimentResult result = bdgeom::run_experiment(spec);
    bdgeom::write_outputs(spec, result);
    if (overrides.quiet)
      std::cout << (result.passed() ? "pass" : "fail") << '\n';
    else
      std::cout << bdgeom::report_table(result);
    return result.exit_code();
  } catch (const bdgeom::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const bdgeom::ContractViolation& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
