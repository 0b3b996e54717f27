#include "bdgeom/acceptance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "bdgeom/errors.hpp"
#include "bdgeom/experiment.hpp"

namespace bdgeom {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

SimulationConfig torus_config(double n, double gamma, double horizon, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.dim = 2;
  cfg.gamma = gamma;
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> grid(double horizon, double step) {
  std::vector<double> out;
  const auto steps = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) out.push_back(static_cast<double>(i) * step);
  return out;
}

const std::vector<double> kLags{0.0, 0.25, 0.5, 1.0, 1.5, 2.0};

CovarianceModel edge_model(double gamma) {
  const Density q = Density::uniform(2);
  const LocalFunctional f = make_clique(2, 1.0);
  std::vector<IntegralEstimate> kappas{kappa_kj(f, q, 1, {}, 0), kappa_kj(f, q, 2, {}, 0)};
  return lambda_weights(2, gamma, kappas);
}

double max_deviation(const CovarianceEstimate& est, const std::function<double(double)>& theory) {
  double worst = 0.0;
  for (std::size_t i = 0; i < est.lags.size(); ++i) worst = std::max(worst, std::abs(est.values[i] - theory(est.lags[i])));
  return worst;
}

// 1. Alive counts at t in {0, 2.5, 5} against Poisson(200).
CheckResult stationarity(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 2000;
  const SimulationConfig cfg = torus_config(200.0, 1.0, 5.0, seed);
  const std::array<double, 3> times{0.0, 2.5, 5.0};
  const auto counts = parallel_map<std::array<std::uint64_t, 3>>(reps, o.jobs, [&](std::size_t r) {
    CounterRng root(seed, r);
    CounterRng init = root.split(0);
    BirthDeathEngine engine(cfg, sample_stationary(cfg, init, 0.1), root.split(1));
    std::array<std::uint64_t, 3> out{};
    auto next = engine.propose();
    for (std::size_t i = 0; i < times.size(); ++i) {
      while (next && next->time <= times[i]) {
        engine.commit(*next);
        next = engine.propose();
      }
      out[i] = engine.configuration().size();
    }
    return out;
  });
  double worst = 1.0;
  std::string detail = "p-values";
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<std::uint64_t> column;
    for (const auto& c : counts) column.push_back(c[i]);
    const TestOutcome t = poisson_chi_square(column, 200.0);
    worst = std::min(worst, t.p_value);
    detail += " t=" + fmt(times[i]) + ":" + fmt(t.p_value);
  }
  return {"1 stationarity chi-square (min p)", worst, 0.01, worst > 0.01, seed, reps, detail};
}

// 2. Event-driven vs marked-construction edge counts at t = 1.
CheckResult cross_sampler(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 2000;
  const SimulationConfig cfg = torus_config(100.0, 1.0, 2.0, seed);
  const FunctionalSelection sel = parse_functional("clique:2", cfg.interaction_radius());
  const std::vector<double> at{1.0};
  const auto driven = parallel_map<double>(reps, o.jobs, [&](std::size_t r) { return sample_path(cfg, sel, at, r).values[0]; });
  const double cell = tracker_cell_size(sel.functional, std::nullopt);
  const auto marked = parallel_map<double>(reps, o.jobs, [&](std::size_t r) {
    CounterRng rng(mix64(seed) + 1, r);
    const MarkedProcess m = sample_marked(cfg, rng);
    return plain_value(slice(m, 1.0, cell), sel.functional);
  });
  const TestOutcome t = ks_two_sample(driven, marked);
  return {"2 cross-sampler KS p-value", t.p_value, 0.01, t.p_value > 0.01, seed, 2 * reps, "D = " + fmt(t.statistic)};
}

// 3. Alive-indicator frequencies of marked points.
CheckResult mark_probabilities(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 400;
  constexpr double T = 2.0;
  const SimulationConfig cfg = torus_config(100.0, 1.0, T, seed);
  const std::array<double, 2> deltas{0.5, 1.0};
  // Per replication: points, alive at 0, alive at each delta, alive at 0 and delta.
  const auto tallies = parallel_map<std::array<double, 6>>(reps, o.jobs, [&](std::size_t r) {
    CounterRng rng(seed, r);
    const MarkedProcess m = sample_marked(cfg, rng);
    std::array<double, 6> t{};
    for (const auto& p : m.points) {
      auto alive = [&](double s) { return p.birth <= s && s < p.birth + p.lifetime; };
      t[0] += 1.0;
      t[1] += alive(0.0);
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        t[2 + d] += alive(deltas[d]);
        t[4 + d] += alive(0.0) && alive(deltas[d]);
      }
    }
    return t;
  });
  std::array<double, 6> sum{};
  for (const auto& t : tallies)
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += t[i];
  const double total = sum[0];
  auto z = [&](double hits, double p) { return std::abs(hits / total - p) / std::sqrt(p * (1.0 - p) / total); };
  double worst = z(sum[1], 1.0 / (1.0 + T));
  std::string detail = "P0 " + fmt(sum[1] / total);
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    worst = std::max(worst, z(sum[2 + d], 1.0 / (1.0 + T)));
    worst = std::max(worst, z(sum[4 + d], std::exp(-deltas[d]) / (1.0 + T)));
    detail += ", D=" + fmt(deltas[d]) + ": P " + fmt(sum[2 + d] / total) + " joint " + fmt(sum[4 + d] / total);
  }
  return {"3 mark probabilities (max |z|)", worst, 3.0, worst <= 3.0, seed, reps, detail};
}

// 4. Mean edge count n^2 pi r^2 / 2.
CheckResult mean_formula(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 5000;
  SimulationConfig cfg = torus_config(100.0, 1.0, 1.0, seed);
  cfg.gamma.reset();
  cfg.radius = 0.05;
  const FunctionalSelection sel = parse_functional("clique:2", 0.05);
  const std::vector<double> at{1.0};
  const auto values = parallel_map<double>(reps, o.jobs, [&](std::size_t r) { return sample_path(cfg, sel, at, r).values[0]; });
  const MomentPrediction m = predict_moments(sel.functional, Density::uniform(2), cfg.n, {}, seed);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (reps - 1.0) / reps);
  const double z = std::abs(mean - m.mean) / se;
  return {"4 mean edge count (|z|)", z, 3.0, z <= 3.0, seed, reps, "empirical " + fmt(mean) + ", predicted " + fmt(m.mean)};
}

// 5. Edge-count covariance, n = 1000.
CheckResult edge_covariance(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 200;
  const SimulationConfig cfg = torus_config(1000.0, 1.0, 20.0, seed);
  const FunctionalSelection sel = parse_functional("clique:2", cfg.interaction_radius());
  const auto paths = collect_paths(cfg, sel, grid(cfg.horizon, 0.25), reps, o.jobs);
  const CovarianceEstimate est = estimate_covariance(paths, kLags);
  const CovarianceModel model = edge_model(1.0);
  const double worst = max_deviation(est, [&](double d) { return covariance_curve(model, d); });
  std::string detail = "empirical";
  for (double v : est.values) detail += " " + fmt(v);
  return {"5 edge covariance (max deviation)", worst, 0.05, worst <= 0.05, seed, reps, detail};
}

// 6. Kolmogorov distance to the normal shrinks with n.
CheckResult gaussianity(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 2000;
  auto dk = [&](double n) {
    const SimulationConfig cfg = torus_config(n, 1.0, 1.0, mix64(seed + static_cast<std::uint64_t>(n)));
    const FunctionalSelection sel = parse_functional("clique:2", cfg.interaction_radius());
    const std::vector<double> at{1.0};
    const auto values = parallel_map<double>(reps, o.jobs, [&](std::size_t r) { return sample_path(cfg, sel, at, r).values[0]; });
    return ks_distance(standardize(values));
  };
  const double small = dk(100.0);
  const double large = dk(1000.0);
  const double threshold = std::min(0.05, small);
  return {"6 gaussianity d_K(1000)", large, threshold, large < threshold, seed, 2 * reps, "d_K(100) = " + fmt(small)};
}

// 7. Exclusive 3-clique component covariance, n = 1000.
CheckResult exclusive_covariance(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 200;
  const SimulationConfig cfg = torus_config(1000.0, 1.0, 20.0, seed);
  const FunctionalSelection sel = parse_functional("clique:3:balls", cfg.interaction_radius());
  const McBudget budget{40000, 2048};
  const Density q = Density::uniform(2);
  const ExclusiveKappas table = exclusive_kappas(sel.functional, *sel.neighborhood, q, 1.0, 20, budget, mix64(seed));
  const CovarianceModel model = exclusive_lambda_weights(table, 20, std::numeric_limits<double>::infinity());
  const auto resummed = exclusive_curve_resummed(sel.functional, *sel.neighborhood, q, 1.0, kLags, budget, mix64(seed + 1));
  const auto occupancy = exclusive_curve_resummed(sel.functional, *sel.neighborhood, q, 1.0, kLags, budget, mix64(seed + 1), true);

  const auto paths = collect_paths(cfg, sel, grid(cfg.horizon, 0.25), reps, o.jobs);
  const CovarianceEstimate est = estimate_covariance(paths, kLags);
  const double worst = max_deviation(est, [&](double d) { return covariance_curve(model, d); });
  double worst_resummed = 0.0, worst_occupancy = 0.0;
  for (std::size_t i = 0; i < kLags.size(); ++i) {
    worst_resummed = std::max(worst_resummed, std::abs(est.values[i] - resummed[i]));
    worst_occupancy = std::max(worst_occupancy, std::abs(est.values[i] - occupancy[i]));
  }
  std::string detail = "tail bound " + fmt(model.tail_bound) + "; resummed deviation " + fmt(worst_resummed) +
                       "; with cross-occupancy " + fmt(worst_occupancy) + "; empirical";
  for (std::size_t i = 0; i < kLags.size(); ++i) detail += " " + fmt(est.values[i]) + "+-" + fmt(est.ci_half_widths[i]);
  detail += "; theory";
  for (double d : kLags) detail += " " + fmt(covariance_curve(model, d));
  detail += "; cross-occupancy";
  for (double v : occupancy) detail += " " + fmt(v);
  return {"7 exclusive covariance (max deviation)", worst, 0.07, worst <= 0.07, seed, reps, detail};
}

// 8. Mecke battery pass rate over five seeds.
CheckResult mecke(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t rounds = 5, samples = 4000;
  const auto battery = mecke_battery();
  const Density q = Density::uniform(2);
  const auto outcomes = parallel_map<MeckeResult>(rounds * battery.size(), o.jobs, [&](std::size_t i) {
    const auto& c = battery[i % battery.size()];
    return mecke_oracle(c.h, c.pattern, c.n, q, samples, mix64(seed + i));
  });
  std::size_t passed = 0;
  std::string detail = "disagreements:";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    passed += outcomes[i].agree;
    if (!outcomes[i].agree) detail += " " + battery[i % battery.size()].name;
  }
  const double rate = static_cast<double>(passed) / static_cast<double>(outcomes.size());
  return {"8 mecke battery pass rate", rate, 0.95, rate >= 0.95, seed, rounds * battery.size() * samples, detail};
}

// 9. Incremental tracker equals recomputation after every event.
CheckResult replay(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t streams = 10, events = 1000;
  const std::vector<std::string> selectors{"clique:2",       "clique:3",       "subgraph:3:0-1,1-2",       "morse:2",           "morse:3",
                                           "clique:2:balls", "clique:3:balls", "subgraph:3:0-1,1-2:balls", "morse:2:circumball", "morse:3:circumball"};
  const SimulationConfig cfg = torus_config(60.0, 2.0, 1e9, seed);
  const double r = cfg.interaction_radius();
  const auto mismatches = parallel_map<std::size_t>(streams * selectors.size(), o.jobs, [&](std::size_t job) {
    const std::size_t stream = job / selectors.size();
    const FunctionalSelection sel = parse_functional(selectors[job % selectors.size()], r);
    CounterRng root(seed, stream);
    CounterRng init = root.split(0);
    Configuration initial = sample_stationary(cfg, init, tracker_cell_size(sel.functional, sel.neighborhood));
    StatisticTracker tracker(initial, sel.functional, sel.neighborhood);
    BirthDeathEngine engine(cfg, std::move(initial), root.split(1));
    std::size_t bad = 0;
    for (std::size_t e = 0; e < events; ++e) {
      const auto next = engine.propose();
      if (!next) break;
      tracker.apply_event(*next, engine.configuration());
      engine.commit(*next);
      const Configuration& now = engine.configuration();
      const double fresh = sel.neighborhood ? exclusive_value(now, sel.functional, *sel.neighborhood) : plain_value(now, sel.functional);
      bad += tracker.value() != fresh;
    }
    return bad;
  });
  std::size_t total = 0;
  for (auto m : mismatches) total += m;
  return {"9 replay vs recompute mismatches", static_cast<double>(total), 0.0, total == 0, seed, streams * events,
          std::to_string(selectors.size()) + " functional/mode pairs"};
}

// 10. Alternating Morse critical-point count is 1.
CheckResult euler(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t configs = 100, points = 20;
  const auto ok = parallel_map<int>(2 * configs, o.jobs, [&](std::size_t i) {
    const int d = i < configs ? 1 : 2;
    CounterRng rng(seed, i);
    std::vector<Position> pts;
    for (std::size_t p = 0; p < points; ++p) {
      Position x(d);
      for (int c = 0; c < d; ++c) x[c] = rng.uniform();
      pts.push_back(x);
    }
    return morse_euler_check(pts).value == 1 ? 1 : 0;
  });
  std::size_t good = 0;
  for (int v : ok) good += static_cast<std::size_t>(v);
  const double frac = static_cast<double>(good) / static_cast<double>(ok.size());
  return {"10 morse euler invariant (fraction)", frac, 1.0, good == ok.size(), seed, ok.size(), "100 configurations each in d = 1, 2"};
}

// 11. Covariance estimator on exact OU superpositions.
CheckResult ou_loop(const AcceptanceOptions& o, std::uint64_t seed) {
  constexpr std::size_t reps = 500;
  const CovarianceModel model = edge_model(1.0);
  const std::vector<double> times = grid(10.0, 0.25);
  const auto paths = parallel_map<TimeSeries>(reps, o.jobs, [&](std::size_t r) { return simulate_ou_superposition(model, times, seed, r); });
  const std::vector<double> lags = grid(3.0, 0.25);
  const CovarianceEstimate est = estimate_covariance(paths, lags);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < lags.size(); ++i)
    inside += std::abs(est.values[i] - covariance_curve(model, lags[i])) <= est.ci_half_widths[i] + 1e-12;
  const double frac = static_cast<double>(inside) / static_cast<double>(lags.size());
  return {"11 OU loop lags inside 95% CI", frac, 0.9, frac >= 0.9, seed, reps, std::to_string(inside) + "/" + std::to_string(lags.size())};
}

// 12. Dense and sparse regime limits of the plain weights.
CheckResult regimes(const AcceptanceOptions&, std::uint64_t seed) {
  const Density q = Density::uniform(2);
  double worst = 1.0;
  std::string detail;
  for (int k : {2, 3}) {
    const LocalFunctional f = make_clique(k, 1.0);
    std::vector<IntegralEstimate> kappas;
    for (int j = 1; j <= k; ++j) kappas.push_back(kappa_kj(f, q, j, {200000, 1}, mix64(seed + static_cast<std::uint64_t>(j))));
    const double dense = lambda_weights(k, 1e3, kappas).weights.front();
    const double sparse = lambda_weights(k, 1e-3, kappas).weights.back();
    worst = std::min({worst, dense, sparse});
    detail += "k=" + std::to_string(k) + ": rate 1 " + fmt(dense) + ", rate k " + fmt(sparse) + "; ";
  }
  return {"12 regime limits (min weight)", worst, 0.99, worst >= 0.99, seed, 200000, detail};
}

}  // namespace

CheckResult acceptance_criterion(int id, const AcceptanceOptions& options) {
  const std::uint64_t seed = mix64(options.seed + static_cast<std::uint64_t>(id));
  switch (id) {
    case 1: return stationarity(options, seed);
    case 2: return cross_sampler(options, seed);
    case 3: return mark_probabilities(options, seed);
    case 4: return mean_formula(options, seed);
    case 5: return edge_covariance(options, seed);
    case 6: return gaussianity(options, seed);
    case 7: return exclusive_covariance(options, seed);
    case 8: return mecke(options, seed);
    case 9: return replay(options, seed);
    case 10: return euler(options, seed);
    case 11: return ou_loop(options, seed);
    case 12: return regimes(options, seed);
    default: throw ConfigError("acceptance: criterion id must be 1..12");
  }
}

std::vector<CheckResult> run_acceptance(const AcceptanceOptions& options, std::span<const int> ids) {
  std::vector<int> todo(ids.begin(), ids.end());
  if (todo.empty())
    for (int i = 1; i <= kAcceptanceCriteria; ++i) todo.push_back(i);
  std::vector<CheckResult> out;
  for (int id : todo) {
    out.push_back(acceptance_criterion(id, options));
    if (options.on_result) options.on_result(id, out.back());
  }
  return out;
}

}  // namespace bdgeom
