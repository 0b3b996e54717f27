#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdgeom/process.hpp"
#include "bdgeom/verify.hpp"

using namespace bdgeom;

namespace {

SimulationConfig torus_config(double n, double horizon, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.dim = 2;
  cfg.horizon = horizon;
  cfg.seed = seed;
  cfg.radius = 0.05;
  return cfg;
}

// Exp(1) cdf, for a one-sample KS distance computed by hand.
double exponential_ks(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 1.0 - std::exp(-xs[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / m - f), std::abs(static_cast<double>(i) / m - f)});
  }
  return d;
}

}  // namespace

TEST_CASE("config validation") {
  SimulationConfig cfg = torus_config(100, 1, 1);
  CHECK_NOTHROW(cfg.validate());
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = torus_config(100, -1, 1);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = torus_config(100, 1, 1);
  cfg.density = TableDensity{2, {1.0, 1.0, 1.0, 0.5}};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.density = TableDensity{2, {0.5, 1.5, 1.0, 1.0}};
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma = 1.0;
  CHECK(cfg.interaction_radius() == doctest::Approx(std::sqrt(1.0 / 100.0)));
}

TEST_CASE("density closed forms") {
  const Density uniform = Density::uniform(2);
  CHECK(uniform.integral_power(3.0) == doctest::Approx(1.0));
  CHECK(uniform.sup() == 1.0);
  const Density table(TableDensity{2, {0.5, 1.5, 1.0, 1.0}}, 2);
  CHECK(table.integral_power(2.0) == doctest::Approx((0.25 + 2.25 + 1 + 1) / 4.0));
  CHECK(table.pdf(Position{0.75, 0.25}) == doctest::Approx(1.5));
  const Density gauss(GaussianDensity{0.2}, 2);
  // int q^2 for an isotropic Gaussian in d = 2: 1 / (4 pi sigma^2).
  CHECK(gauss.integral_power(2.0) == doctest::Approx(1.0 / (4.0 * M_PI * 0.04)));
}

TEST_CASE("stationary sample: tiny n is empty, counts are Poisson(n)") {
  SimulationConfig tiny = torus_config(1e-9, 1, 3);
  CounterRng rng(3, 0);
  CHECK(sample_stationary(tiny, rng, 0.1).empty());

  const SimulationConfig cfg = torus_config(200, 1, 5);
  std::vector<std::uint64_t> counts;
  double sum = 0, sumsq = 0;
  for (std::uint64_t rep = 0; rep < 5000; ++rep) {
    CounterRng r(cfg.seed, rep);
    const double c = static_cast<double>(sample_stationary(cfg, r, 0.1).size());
    counts.push_back(static_cast<std::uint64_t>(c));
    sum += c;
    sumsq += c * c;
  }
  const double mean = sum / 5000.0;
  const double var = sumsq / 5000.0 - mean * mean;
  CHECK(std::abs(mean - 200.0) < 3.0 * std::sqrt(200.0 / 5000.0));
  CHECK(var == doctest::Approx(200.0).epsilon(0.08));
  CHECK(poisson_chi_square(counts, 200.0).p_value > 0.01);
}

TEST_CASE("engine: first event from empty is a birth, lifetimes are Exp(1)") {
  SimulationConfig cfg = torus_config(50, 40, 9);
  const Configuration empty(cfg.metric(), 0.1);
  CounterRng rng(9, 0);
  const EventStream events = simulate_events(cfg, empty, rng);
  REQUIRE(!events.empty());
  CHECK(events.front().kind == EventKind::birth);

  std::vector<double> lifetimes;
  double last = -1.0;
  for (const auto& e : events) {
    CHECK(e.time > last);
    last = e.time;
    if (e.kind == EventKind::death) lifetimes.push_back(e.point.lifetime);
  }
  REQUIRE(lifetimes.size() > 1000);
  // 99% KS critical value 1.63 / sqrt(m).
  CHECK(exponential_ks(lifetimes) < 1.63 / std::sqrt(static_cast<double>(lifetimes.size())));
}

TEST_CASE("engine is deterministic for a fixed seed") {
  const SimulationConfig cfg = torus_config(100, 2, 21);
  auto run = [&] {
    CounterRng r(cfg.seed, 4);
    const Configuration init = sample_stationary(cfg, r, 0.1);
    return event_log_csv(simulate_events(cfg, init, r), 2);
  };
  CHECK(run() == run());
}

TEST_CASE("marked process: counts, birth marks and slicing") {
  const SimulationConfig cfg = torus_config(100, 2, 31);
  double total = 0, at_zero = 0, points = 0;
  for (std::uint64_t rep = 0; rep < 400; ++rep) {
    CounterRng r(cfg.seed, rep);
    const MarkedProcess mp = sample_marked(cfg, r);
    total += static_cast<double>(mp.points.size());
    for (const auto& p : mp.points) {
      points += 1;
      if (p.birth == 0.0) at_zero += 1;
      CHECK(p.lifetime > 0.0);
    }
  }
  CHECK(std::abs(total / 400.0 - 300.0) < 3.0 * std::sqrt(300.0 / 400.0));
  const double frac = at_zero / points;
  CHECK(std::abs(frac - 1.0 / 3.0) < 3.0 * std::sqrt(frac * (1 - frac) / points));

  MarkedProcess manual{2.0, Metric::torus(2), {}};
  manual.points.push_back({0, Position{0.5, 0.5}, 0.0, 2.0});
  manual.points.push_back({1, Position{0.2, 0.2}, 1.5, 5.0});
  const Configuration at1 = slice(manual, 1.0, 0.1);
  CHECK(at1.size() == 1);
  CHECK(at1.contains(0));
  CHECK_THROWS_AS(slice(manual, 3.0, 0.1), ContractViolation);
}

TEST_CASE("marked process with zero horizon reduces to the stationary law") {
  SimulationConfig cfg = torus_config(100, 1, 41);
  cfg.horizon = 0.0;
  CounterRng r(41, 0);
  const MarkedProcess mp = sample_marked(cfg, r);
  for (const auto& p : mp.points) CHECK(p.birth == 0.0);
}

TEST_CASE("configuration swap-remove keeps ids consistent") {
  Configuration cfg(Metric::torus(2), 0.1);
  for (PointId i = 0; i < 5; ++i) cfg.insert({i, Position{0.1 * static_cast<double>(i + 1), 0.5}, 0.0, 1.0});
  const MarkedPoint gone = cfg.erase(1);
  CHECK(gone.id == 1);
  CHECK(cfg.size() == 4);
  CHECK_FALSE(cfg.contains(1));
  for (std::size_t i = 0; i < cfg.size(); ++i) CHECK(cfg.point(cfg.id_at(i)).id == cfg.id_at(i));
  CHECK_THROWS_AS(cfg.erase(1), ContractViolation);
  CHECK_THROWS_AS(cfg.insert({0, Position{0.5, 0.5}, 0.0, 1.0}), ContractViolation);
}
