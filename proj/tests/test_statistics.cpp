#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdgeom/statistics.hpp"

using namespace bdgeom;

namespace {

std::vector<MarkedPoint> uniform_points(std::size_t count, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<MarkedPoint> pts;
  for (std::size_t i = 0; i < count; ++i) pts.push_back({i, Position{rng.uniform(), rng.uniform()}, 0.0, 1.0});
  return pts;
}

// Sum of xi over all k-subsets (and vacancy in exclusive mode), no grid.
double brute_force(const std::vector<MarkedPoint>& pts, const LocalFunctional& f, const NeighborhoodMap* nbhd) {
  const Metric m = Metric::torus(2);
  double total = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(f.k));
  auto recurse = [&](auto&& self, std::size_t depth, std::size_t start) -> void {
    if (depth == idx.size()) {
      std::vector<Position> raw;
      for (auto i : idx) raw.push_back(pts[i].position);
      const auto chart = local_chart(raw, m);
      if (diameter(chart) > 0.45) return;
      const double xi = f(chart);
      if (xi == 0.0) return;
      if (nbhd) {
        const Region region = nbhd->build(chart, f.r);
        for (std::size_t j = 0; j < pts.size(); ++j) {
          if (std::find(idx.begin(), idx.end(), j) != idx.end()) continue;
          if (region.contains(m.unwrap_near(chart.front(), pts[j].position))) return;
        }
      }
      total += xi;
      return;
    }
    for (std::size_t i = start; i < pts.size(); ++i) {
      idx[depth] = i;
      self(self, depth + 1, i + 1);
    }
  };
  recurse(recurse, 0, 0);
  return total;
}

Configuration build(const std::vector<MarkedPoint>& pts, double cell) {
  Configuration cfg(Metric::torus(2), cell);
  for (const auto& p : pts) cfg.insert(p);
  return cfg;
}

}  // namespace

TEST_CASE("tracker on empty and single-triangle configurations") {
  const LocalFunctional f = make_clique(3, 0.1);
  Configuration empty(Metric::torus(2), 0.1);
  CHECK(StatisticTracker(empty, f).value() == 0.0);
  const std::vector<MarkedPoint> tri = {{0, Position{0.5, 0.5}, 0, 1}, {1, Position{0.55, 0.5}, 0, 1}, {2, Position{0.52, 0.55}, 0, 1}};
  CHECK(StatisticTracker(build(tri, 0.1), f).value() == 1.0);
}

TEST_CASE("from-scratch values match brute force") {
  const auto pts = uniform_points(300, 3);
  const LocalFunctional edge = make_clique(2, 0.05);
  CHECK(plain_value(build(pts, 0.05), edge) == brute_force(pts, edge, nullptr));
  const LocalFunctional tri = make_clique(3, 0.06);
  CHECK(plain_value(build(pts, 0.06), tri) == brute_force(pts, tri, nullptr));

  const auto small = uniform_points(120, 4);
  const NeighborhoodMap balls = make_neighborhood(NeighborhoodKind::balls, tri);
  const double cell = tracker_cell_size(tri, balls);
  CHECK(exclusive_value(build(small, cell), tri, balls) == brute_force(small, tri, &balls));
  const LocalFunctional morse = make_morse(2, 0.06);
  const NeighborhoodMap ball = make_neighborhood(NeighborhoodKind::circumball, morse);
  CHECK(exclusive_value(build(small, tracker_cell_size(morse, ball)), morse, ball) == brute_force(small, morse, &ball));
}

TEST_CASE("tracker rejects an undersized index") {
  const LocalFunctional f = make_clique(3, 0.1);
  const NeighborhoodMap balls = make_neighborhood(NeighborhoodKind::balls, f);
  Configuration cfg(Metric::torus(2), 0.1);
  CHECK_THROWS_AS(StatisticTracker(cfg, f, balls), ContractViolation);
}

TEST_CASE("birth adds the neighbor count; birth then death is an involution") {
  const LocalFunctional edge = make_clique(2, 0.1);
  auto pts = uniform_points(200, 5);
  Configuration cfg = build(pts, 0.1);
  StatisticTracker tr(cfg, edge);
  const double before = tr.value();
  const MarkedPoint newcomer{1000, Position{0.5, 0.5}, 0.3, 1.0};
  const double m = static_cast<double>(cfg.neighbors_within(newcomer.position, 0.1).size());
  tr.apply_event({0.3, EventKind::birth, newcomer}, cfg);
  cfg.insert(newcomer);
  CHECK(tr.value() == before + m);
  tr.apply_event({0.4, EventKind::death, newcomer}, cfg);
  cfg.erase(newcomer.id);
  CHECK(tr.value() == before);
  CHECK_THROWS_AS(tr.apply_event({0.5, EventKind::death, newcomer}, cfg), ContractViolation);
}

TEST_CASE("replaying a random event stream matches recomputation") {
  SimulationConfig sim;
  sim.n = 150;
  sim.horizon = 5.0;
  sim.seed = 77;
  sim.gamma = 2.0;
  const double r = sim.interaction_radius();
  for (const char* selector : {"clique:2", "clique:3:balls", "morse:2:circumball", "subgraph:3:0-1,1-2:balls"}) {
    const FunctionalSelection sel = parse_functional(selector, r);
    const double cell = tracker_cell_size(sel.functional, sel.neighborhood);
    CounterRng rng(sim.seed, 0);
    Configuration cfg = sample_stationary(sim, rng, cell);
    StatisticTracker tr(cfg, sel.functional, sel.neighborhood);
    const EventStream events = simulate_events(sim, cfg, rng);
    REQUIRE(events.size() >= 500);
    for (std::size_t i = 0; i < 500; ++i) {
      tr.apply_event(events[i], cfg);
      if (events[i].kind == EventKind::birth)
        cfg.insert(events[i].point);
      else
        cfg.erase(events[i].point.id);
    }
    const double fresh = sel.neighborhood ? exclusive_value(cfg, sel.functional, *sel.neighborhood) : plain_value(cfg, sel.functional);
    CHECK_MESSAGE(tr.value() == doctest::Approx(fresh).epsilon(1e-12), selector);
  }
}

TEST_CASE("two far-apart triangles are two components") {
  const double r = 0.05;
  const std::vector<MarkedPoint> pts = {{0, Position{0.1, 0.1}, 0, 1}, {1, Position{0.13, 0.1}, 0, 1}, {2, Position{0.11, 0.13}, 0, 1},
                                        {3, Position{0.6, 0.6}, 0, 1}, {4, Position{0.63, 0.6}, 0, 1}, {5, Position{0.61, 0.63}, 0, 1}};
  const LocalFunctional f = make_clique(3, r);
  const NeighborhoodMap balls = make_neighborhood(NeighborhoodKind::balls, f);
  CHECK(exclusive_value(build(pts, tracker_cell_size(f, balls)), f, balls) == 2.0);
}

TEST_CASE("sample paths") {
  SimulationConfig sim;
  sim.n = 100;
  sim.horizon = 2.0;
  sim.seed = 5;
  sim.radius = 0.05;
  const FunctionalSelection sel = parse_functional("clique:2", 0.05);
  const double at0[] = {0.0};
  const TimeSeries single = sample_path(sim, sel, at0, 3);
  REQUIRE(single.values.size() == 1);
  CounterRng rng = CounterRng(sim.seed, 3).split(0);
  CHECK(single.values[0] == plain_value(sample_stationary(sim, rng, tracker_cell_size(sel.functional, std::nullopt)), sel.functional));

  const double dense[] = {0.0, 1e-9, 2e-9};
  const TimeSeries tight = sample_path(sim, sel, dense, 8);
  CHECK(tight.values[0] == tight.values[1]);
  CHECK(tight.values[1] == tight.values[2]);
  CHECK(paths_csv(std::span(&single, 1)).find("rep,t,value") == 0);
}

TEST_CASE("long-run time average of the edge count") {
  SimulationConfig sim;
  sim.n = 200;
  sim.horizon = 200.0;
  sim.seed = 12;
  sim.radius = 0.05;
  const FunctionalSelection sel = parse_functional("clique:2", sim.radius.value());
  std::vector<double> times;
  for (double t = 0; t <= sim.horizon; t += 0.5) times.push_back(t);
  const TimeSeries path = sample_path(sim, sel, times, 0);
  double avg = 0;
  for (double v : path.values) avg += v;
  avg /= static_cast<double>(path.values.size());
  const double mean = 200.0 * 200.0 * M_PI * 0.0025 / 2.0;
  CHECK(avg == doctest::Approx(mean).epsilon(0.05));
}

TEST_CASE("compensated sum cancels exactly") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
}
