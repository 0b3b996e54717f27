#include "bdgeom/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bdgeom/acceptance.hpp"
#include "bdgeom/errors.hpp"

namespace bdgeom {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kModeNames[] = {"simulate", "theory", "covariance", "gaussianity", "oracle", "euler", "full"};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double gamma_of(const SimulationConfig& cfg) {
  if (cfg.gamma) return *cfg.gamma;
  return cfg.n * std::pow(cfg.interaction_radius(), cfg.dim);
}

template <class T>
T get_as(const Json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
  }
}

Density::Spec density_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: 'density' must be an object");
  std::string kind = "uniform";
  double sigma = 0.1;
  TableDensity table;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind")
      kind = get_as<std::string>(value, "density.kind");
    else if (key == "sigma")
      sigma = get_as<double>(value, "density.sigma");
    else if (key == "cells_per_dim")
      table.cells_per_dim = get_as<int>(value, "density.cells_per_dim");
    else if (key == "values")
      table.values = get_as<std::vector<double>>(value, "density.values");
    else
      throw ConfigError("config: unknown density field '" + key + "'");
  }
  if (kind == "uniform") return UniformTorus{};
  if (kind == "gaussian") return GaussianDensity{sigma};
  if (kind == "table") return table;
  throw ConfigError("config: unknown density kind '" + kind + "'");
}

Json density_to_json(const Density::Spec& spec) {
  Json j;
  if (std::holds_alternative<UniformTorus>(spec)) {
    j["kind"] = "uniform";
  } else if (const auto* g = std::get_if<GaussianDensity>(&spec)) {
    j["kind"] = "gaussian";
    j["sigma"] = g->sigma;
  } else {
    const auto& t = std::get<TableDensity>(spec);
    j["kind"] = "table";
    j["cells_per_dim"] = t.cells_per_dim;
    j["values"] = t.values;
  }
  return j;
}

SimulationConfig simulation_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: 'simulation' must be an object");
  SimulationConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "n")
      cfg.n = get_as<double>(value, "simulation.n");
    else if (key == "dim")
      cfg.dim = get_as<int>(value, "simulation.dim");
    else if (key == "horizon")
      cfg.horizon = get_as<double>(value, "simulation.horizon");
    else if (key == "seed")
      cfg.seed = get_as<std::uint64_t>(value, "simulation.seed");
    else if (key == "gamma")
      cfg.gamma = value.is_null() ? std::nullopt : std::optional<double>(get_as<double>(value, "simulation.gamma"));
    else if (key == "radius")
      cfg.radius = value.is_null() ? std::nullopt : std::optional<double>(get_as<double>(value, "simulation.radius"));
    else if (key == "density")
      cfg.density = density_from_json(value);
    else
      throw ConfigError("config: unknown simulation field '" + key + "'");
  }
  return cfg;
}

std::vector<double> default_lags(const std::vector<double>& times) {
  std::vector<double> out;
  const double span = times.empty() ? 0.0 : times.back() - times.front();
  for (double lag : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0})
    if (lag <= span + 1e-12) out.push_back(lag);
  return out;
}

Json checks_json(std::span<const CheckResult> checks) { return Json::parse(report_json(checks)); }

}  // namespace

Mode parse_mode(const std::string& name) {
  for (std::size_t i = 0; i < std::size(kModeNames); ++i)
    if (name == kModeNames[i]) return static_cast<Mode>(i);
  throw ConfigError("unknown mode '" + name + "'");
}

std::string to_string(Mode mode) { return kModeNames[static_cast<std::size_t>(mode)]; }

std::vector<double> ExperimentSpec::times() const {
  if (!sample_times.empty()) return sample_times;
  std::vector<double> out;
  const auto steps = static_cast<std::size_t>(std::floor(simulation.horizon / sample_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) out.push_back(static_cast<double>(i) * sample_step);
  return out;
}

void ExperimentSpec::validate() const {
  simulation.validate();
  (void)simulation.interaction_radius();
  if (replications < 1) throw ConfigError("config: replications must be at least 1");
  if (jobs < 1) throw ConfigError("config: jobs must be at least 1");
  if (sample_times.empty() && !(sample_step > 0.0)) throw ConfigError("config: sample_step must be positive");
  const auto t = times();
  if (t.empty()) throw ConfigError("config: no sample times");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 0.0 || t[i] > simulation.horizon) throw ConfigError("config: sample time outside [0, horizon]");
    if (i > 0 && !(t[i] > t[i - 1])) throw ConfigError("config: sample times must increase");
  }
  for (double lag : lags)
    if (lag < 0.0 || lag > t.back() - t.front() + 1e-12) throw ConfigError("config: lag outside the span of sample times");
  if (l_max < 1 || l_max_cap < l_max) throw ConfigError("config: need 1 <= l_max <= l_max_cap");
  if (budget.samples < 2 || budget.volume_samples < 1) throw ConfigError("config: Monte Carlo budget too small");
  if (mode == Mode::covariance && replications < 30) throw ConfigError("config: covariance mode needs at least 30 replications");
  (void)parse_functional(functional, simulation.interaction_radius());
}

ExperimentSpec spec_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "mode")
      spec.mode = parse_mode(get_as<std::string>(value, "mode"));
    else if (key == "simulation")
      spec.simulation = simulation_from_json(value);
    else if (key == "functional")
      spec.functional = get_as<std::string>(value, "functional");
    else if (key == "sample_times")
      spec.sample_times = get_as<std::vector<double>>(value, "sample_times");
    else if (key == "sample_step")
      spec.sample_step = get_as<double>(value, "sample_step");
    else if (key == "replications")
      spec.replications = get_as<std::size_t>(value, "replications");
    else if (key == "lags")
      spec.lags = get_as<std::vector<double>>(value, "lags");
    else if (key == "output_dir")
      spec.output_dir = get_as<std::string>(value, "output_dir");
    else if (key == "jobs")
      spec.jobs = get_as<unsigned>(value, "jobs");
    else if (key == "mc_samples")
      spec.budget.samples = get_as<std::size_t>(value, "mc_samples");
    else if (key == "volume_samples")
      spec.budget.volume_samples = get_as<std::size_t>(value, "volume_samples");
    else if (key == "l_max")
      spec.l_max = get_as<int>(value, "l_max");
    else if (key == "l_max_cap")
      spec.l_max_cap = get_as<int>(value, "l_max_cap");
    else if (key == "tail_tol")
      spec.tail_tol = get_as<double>(value, "tail_tol");
    else if (key == "tolerance")
      spec.tolerance = get_as<double>(value, "tolerance");
    else if (key == "ks_threshold")
      spec.ks_threshold = get_as<double>(value, "ks_threshold");
    else if (key == "euler_points")
      spec.euler_points = get_as<std::size_t>(value, "euler_points");
    else
      throw ConfigError("config: unknown field '" + key + "'");
  }
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  Json sim;
  sim["n"] = spec.simulation.n;
  sim["dim"] = spec.simulation.dim;
  sim["horizon"] = spec.simulation.horizon;
  sim["seed"] = spec.simulation.seed;
  sim["gamma"] = spec.simulation.gamma ? Json(*spec.simulation.gamma) : Json(nullptr);
  sim["radius"] = spec.simulation.radius ? Json(*spec.simulation.radius) : Json(nullptr);
  sim["density"] = density_to_json(spec.simulation.density);
  Json j;
  j["mode"] = to_string(spec.mode);
  j["simulation"] = sim;
  j["functional"] = spec.functional;
  j["sample_times"] = spec.sample_times;
  j["sample_step"] = spec.sample_step;
  j["replications"] = spec.replications;
  j["lags"] = spec.lags;
  j["output_dir"] = spec.output_dir;
  j["mc_samples"] = spec.budget.samples;
  j["volume_samples"] = spec.budget.volume_samples;
  j["l_max"] = spec.l_max;
  j["l_max_cap"] = spec.l_max_cap;
  j["tail_tol"] = spec.tail_tol;
  j["tolerance"] = spec.tolerance;
  j["ks_threshold"] = spec.ks_threshold;
  j["euler_points"] = spec.euler_points;
  return j.dump(2);
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<TimeSeries> collect_paths(const SimulationConfig& cfg, const FunctionalSelection& sel, std::span<const double> times,
                                      std::size_t replications, unsigned jobs) {
  const std::vector<double> grid(times.begin(), times.end());
  return parallel_map<TimeSeries>(replications, jobs, [&](std::size_t r) { return sample_path(cfg, sel, grid, r); });
}

CovarianceModel build_model(const ExperimentSpec& spec, const FunctionalSelection& sel, std::vector<std::string>& notes) {
  const SimulationConfig& sim = spec.simulation;
  const Density q = sim.make_density();
  const double gamma = gamma_of(sim);
  const LocalFunctional& f = sel.functional;
  if (!sel.neighborhood) {
    std::vector<IntegralEstimate> kappas;
    for (int j = 1; j <= f.k; ++j) kappas.push_back(kappa_kj(f, q, j, spec.budget, mix64(sim.seed + static_cast<std::uint64_t>(j))));
    if (f.is_edge()) notes.push_back("kappa_{2,j} from the closed form");
    CovarianceModel model = lambda_weights(f.k, gamma, kappas);
    model.functional = spec.functional;
    return model;
  }
  const ExclusiveKappas table = exclusive_kappas(f, *sel.neighborhood, q, gamma, spec.l_max_cap, spec.budget, sim.seed);
  int l = spec.l_max;
  for (;;) {
    try {
      CovarianceModel model = exclusive_lambda_weights(table, l, spec.tail_tol);
      model.functional = spec.functional;
      if (l != spec.l_max) notes.push_back("L_max raised from " + std::to_string(spec.l_max) + " to " + std::to_string(l) + " to certify the tail");
      return model;
    } catch (const TruncationError&) {
      if (l * 2 > spec.l_max_cap) break;
      l *= 2;
    }
  }
  CovarianceModel model = exclusive_lambda_weights(table, spec.l_max_cap, std::numeric_limits<double>::infinity());
  model.functional = spec.functional;
  notes.push_back("tail not certified at L_max = " + std::to_string(spec.l_max_cap));
  return model;
}

std::string covariance_csv(const CovarianceEstimate& est, const CovarianceModel& model) {
  std::ostringstream os;
  os << "lag,emp,ci,theory\n";
  for (std::size_t i = 0; i < est.lags.size(); ++i)
    os << fmt(est.lags[i]) << ',' << fmt(est.values[i]) << ',' << fmt(est.ci_half_widths[i]) << ','
       << fmt(covariance_curve(model, est.lags[i])) << '\n';
  return os.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.mode = spec.mode;
  result.seed = spec.simulation.seed;
  const SimulationConfig& sim = spec.simulation;
  const double r = sim.interaction_radius();
  const FunctionalSelection sel = parse_functional(spec.functional, r);
  const std::vector<double> times = spec.times();

  switch (spec.mode) {
    case Mode::simulate: {
      const auto paths = collect_paths(sim, sel, times, spec.replications, spec.jobs);
      result.files.emplace_back("paths.csv", paths_csv(paths));
      break;
    }
    case Mode::theory: {
      const CovarianceModel model = build_model(spec, sel, result.notes);
      result.files.emplace_back("model.json", model_json(model) + "\n");
      if (!sel.neighborhood) {
        const MomentPrediction m = predict_moments(sel.functional, sim.make_density(), sim.n, spec.budget, sim.seed);
        result.notes.push_back("mean " + fmt(m.mean) + " (se " + fmt(m.mean_se) + "), variance " + fmt(m.variance) + " (se " +
                               fmt(m.variance_se) + ")");
      } else {
        result.checks.push_back({"tail certificate", model.tail_bound, spec.tail_tol, model.tail_bound <= spec.tail_tol, sim.seed,
                                 spec.budget.samples, "L_max = " + std::to_string(model.rates.size())});
      }
      break;
    }
    case Mode::covariance: {
      const auto paths = collect_paths(sim, sel, times, spec.replications, spec.jobs);
      const std::vector<double> lags = spec.lags.empty() ? default_lags(times) : spec.lags;
      const CovarianceEstimate est = estimate_covariance(paths, lags);
      const CovarianceModel model = build_model(spec, sel, result.notes);
      double worst = 0.0;
      for (std::size_t i = 0; i < lags.size(); ++i) worst = std::max(worst, std::abs(est.values[i] - covariance_curve(model, lags[i])));
      result.checks.push_back({"covariance curve", worst, spec.tolerance, worst <= spec.tolerance, sim.seed, spec.replications,
                               "max |empirical - theory| over lags"});
      result.files.emplace_back("paths.csv", paths_csv(paths));
      result.files.emplace_back("cov.csv", covariance_csv(est, model));
      result.files.emplace_back("model.json", model_json(model) + "\n");
      break;
    }
    case Mode::gaussianity: {
      const std::vector<double> snap{times.back()};
      const auto paths = collect_paths(sim, sel, snap, spec.replications, spec.jobs);
      std::vector<double> values;
      for (const auto& p : paths) values.push_back(p.values.back());
      const double dk = ks_distance(standardize(values));
      result.checks.push_back({"kolmogorov distance", dk, spec.ks_threshold, dk < spec.ks_threshold, sim.seed, spec.replications,
                               "standardized statistic at t = " + fmt(times.back())});
      result.files.emplace_back("paths.csv", paths_csv(paths));
      break;
    }
    case Mode::oracle: {
      const auto battery = mecke_battery();
      const Density q = Density::uniform(2);
      std::size_t passed = 0, total = 0;
      for (std::size_t round = 0; round < spec.replications; ++round) {
        const std::uint64_t seed = mix64(sim.seed + round);
        const auto outcomes = parallel_map<MeckeResult>(battery.size(), spec.jobs, [&](std::size_t i) {
          return mecke_oracle(battery[i].h, battery[i].pattern, battery[i].n, q, 4000, mix64(seed ^ i));
        });
        for (std::size_t i = 0; i < battery.size(); ++i) {
          const auto& o = outcomes[i];
          result.notes.push_back("mecke " + battery[i].name + " " + battery[i].pattern.to_string() + ": lhs " + fmt(o.lhs) + " (se " +
                                 fmt(o.lhs_se) + "), rhs " + fmt(o.rhs) + " (se " + fmt(o.rhs_se) + ")" + (o.agree ? "" : " disagree"));
          passed += o.agree;
          ++total;
        }
      }
      // Single disagreements are expected at the 3-SE level; the verdict is
      // the battery pass rate.
      const double rate = static_cast<double>(passed) / static_cast<double>(total);
      result.checks.push_back({"mecke pass rate", rate, 0.95, rate >= 0.95, sim.seed, total, ""});
      break;
    }
    case Mode::euler: {
      const int d = sim.dim;
      const auto values = parallel_map<EulerResult>(spec.replications, spec.jobs, [&](std::size_t i) {
        CounterRng rng(sim.seed, i);
        std::vector<Position> pts;
        for (std::size_t p = 0; p < spec.euler_points; ++p) {
          Position x(d);
          for (int c = 0; c < d; ++c) x[c] = rng.uniform();
          pts.push_back(x);
        }
        return morse_euler_check(pts);
      });
      std::size_t ok = 0;
      for (const auto& v : values) ok += v.value == 1;
      result.checks.push_back({"morse euler characteristic", static_cast<double>(ok), static_cast<double>(spec.replications),
                               ok == spec.replications, sim.seed, spec.replications, "configurations with alternating sum 1"});
      break;
    }
    case Mode::full: {
      AcceptanceOptions opts;
      opts.jobs = spec.jobs;
      opts.seed = sim.seed;
      result.checks = run_acceptance(opts);
      break;
    }
  }
  return result;
}

std::string emit_report(const ExperimentResult& result) {
  Json j;
  j["mode"] = to_string(result.mode);
  j["seed"] = result.seed;
  j["pass"] = result.passed();
  j["checks"] = checks_json(result.checks);
  j["notes"] = result.notes;
  return j.dump(2) + "\n";
}

std::string report_table(const ExperimentResult& result) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-44s %14s %14s  %s\n", "check", "observed", "threshold", "verdict");
  os << line;
  for (const auto& c : result.checks) {
    std::snprintf(line, sizeof line, "%-44.44s %14.6g %14.6g  %s\n", c.test.c_str(), c.statistic, c.threshold, c.pass ? "pass" : "FAIL");
    os << line;
  }
  for (const auto& n : result.notes) os << "note: " << n << '\n';
  os << (result.passed() ? "all checks passed" : "some checks failed") << " (" << result.checks.size() << " checks)\n";
  return os.str();
}

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(spec.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + spec.output_dir + "': " + ec.message());
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    out << text;
  };
  for (const auto& [name, text] : result.files) put(name, text);
  put("summary.json", emit_report(result));
}

}  // namespace bdgeom
