#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdgeom/functionals.hpp"
#include "bdgeom/statistics.hpp"

using namespace bdgeom;

namespace {

Configuration make_config(const std::vector<Position>& pts, double cell) {
  Configuration cfg(Metric::euclidean(pts.front().dim()), cell);
  for (std::size_t i = 0; i < pts.size(); ++i) cfg.insert({i, pts[i], 0.0, 1.0});
  return cfg;
}

}  // namespace

TEST_CASE("clique indicator") {
  const double r = 0.1;
  const Position tri[] = {Position{0, 0}, Position{r, 0}, Position{0.5 * r, 0.5 * r}};
  CHECK(clique_indicator(tri, 3, r) == 1.0);
  const Position far[] = {Position{0.0}, Position{1.2 * r}};
  CHECK(clique_indicator(far, 2, r) == 0.0);
  CHECK(clique_indicator(std::span(tri, 2), 3, r) == 0.0);
}

TEST_CASE("subgraph indicator uses induced isomorphism") {
  const double r = 0.1;
  const SmallGraph path = SmallGraph::parse(3, "0-1,1-2");
  const Position line[] = {Position{0.0}, Position{0.5 * r}, Position{1.2 * r}};
  CHECK(subgraph_indicator(line, r, path) == 1.0);
  const Position tri[] = {Position{0, 0}, Position{r, 0}, Position{0.5 * r, 0.5 * r}};
  CHECK(subgraph_indicator(tri, r, path) == 0.0);
  CHECK_THROWS_AS(make_subgraph(SmallGraph::parse(3, "0-1"), r), ConfigError);
}

TEST_CASE("complete-graph pattern agrees with the clique indicator") {
  CounterRng rng(17, 0);
  const SmallGraph k3 = SmallGraph::complete(3);
  for (int t = 0; t < 1000; ++t) {
    std::vector<Position> s;
    for (int i = 0; i < 3; ++i) s.push_back(Position{rng.uniform(0, 0.2), rng.uniform(0, 0.2)});
    CHECK(subgraph_indicator(s, 0.1, k3) == clique_indicator(s, 3, 0.1));
  }
}

TEST_CASE("graph canonical forms identify relabelings") {
  CHECK(SmallGraph::parse(3, "0-1,1-2").canonical_form() == SmallGraph::parse(3, "0-2,2-1").canonical_form());
  CHECK(SmallGraph::parse(3, "0-1,1-2").canonical_form() != SmallGraph::complete(3).canonical_form());
  CHECK(SmallGraph::parse(4, "0-1,1-2,2-3").hop_diameter() == 3);
  CHECK_FALSE(SmallGraph::parse(4, "0-1,2-3").connected());
}

TEST_CASE("morse indicator") {
  const double r = 0.1;
  const Position pair[] = {Position{0.0}, Position{0.8 * r}};
  CHECK(morse_indicator(pair, r) == 1.0);
  const Position obtuse[] = {Position{0, 0}, Position{0.2 * r, 0}, Position{0.1 * r, 0.02 * r}};
  CHECK(morse_indicator(obtuse, r) == 0.0);
  // Equilateral triangle with circumradius 2r.
  const double side = 2.0 * r * std::sqrt(3.0);
  const Position big[] = {Position{0, 0}, Position{side, 0}, Position{0.5 * side, side * std::sqrt(3.0) / 2.0}};
  CHECK(morse_indicator(big, r) == 0.0);
  const Position degenerate[] = {Position{0, 0}, Position{0.05, 0}, Position{0.1, 0}};
  CHECK(morse_indicator(degenerate, r) == 0.0);
}

TEST_CASE("ball-union emptiness") {
  const double r = 0.1;
  const std::vector<Position> tri = {Position{0, 0}, Position{r, 0}, Position{0.5 * r, 0.5 * r}};
  std::vector<Position> pts = tri;
  pts.push_back(Position{-0.5 * r, 0});
  const PointId members[] = {0, 1, 2};
  CHECK_FALSE(ball_union_empty(tri, r, make_config(pts, 0.5), members));
  pts.back() = Position{-3 * r, 0};
  CHECK(ball_union_empty(tri, r, make_config(pts, 0.5), members));
}

TEST_CASE("ball-union emptiness matches brute force") {
  CounterRng rng(23, 0);
  const double r = 0.08;
  for (int t = 0; t < 500; ++t) {
    std::vector<Position> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(Position{rng.uniform(), rng.uniform()});
    pts[1] = pts[0] + Position{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
    const Configuration cfg = make_config(pts, 0.5);
    const std::vector<Position> s = {pts[0], pts[1]};
    const PointId members[] = {0, 1};
    bool brute = true;
    for (std::size_t i = 2; i < pts.size(); ++i)
      for (const auto& c : s)
        if (distance(c, pts[i], Metric::euclidean(2)) <= r) brute = false;
    CHECK(ball_union_empty(s, r, cfg, members) == brute);
  }
}

TEST_CASE("neighborhood diameter bound") {
  CounterRng rng(29, 0);
  const double r = 0.1;
  const LocalFunctional f = make_clique(3, r);
  const NeighborhoodMap balls = make_neighborhood(NeighborhoodKind::balls, f);
  for (int t = 0; t < 200; ++t) {
    std::vector<Position> s;
    for (int i = 0; i < 3; ++i) s.push_back(Position{rng.uniform(0, r), rng.uniform(0, r)});
    // A union of r-balls has diameter (largest center distance) + 2r.
    const Region region = balls.build(s, r);
    const double measured = diameter(region.centers()) + 2.0 * region.radius();
    CHECK(measured <= balls.beta_k * std::max(r, diameter(s)) + 1e-12);
  }
}

TEST_CASE("assumption validator") {
  CHECK(validate_assumptions(make_clique(2, 0.1), 10000, 1).clean());
  CHECK(validate_assumptions(make_clique(3, 0.1), 10000, 2).clean());
  CHECK(validate_assumptions(make_morse(3, 0.1), 10000, 3).clean());

  LocalFunctional broken = make_clique(2, 0.1);
  broken.kind = FunctionalKind::custom;
  broken.xi = [](std::span<const Position> s, double) { return std::abs(s[0][0]); };
  const AssumptionReport report = validate_assumptions(broken, 1000, 4);
  CHECK(report.invariance_violations > 0);
}

TEST_CASE("functional selectors") {
  const auto edge = parse_functional("clique:2", 0.1);
  CHECK(edge.functional.is_edge());
  CHECK_FALSE(edge.neighborhood.has_value());
  const auto comp = parse_functional("clique:3:balls", 0.1);
  REQUIRE(comp.neighborhood.has_value());
  CHECK(comp.neighborhood->kind == NeighborhoodKind::balls);
  const auto morse = parse_functional("morse:2:circumball", 0.1);
  CHECK(morse.neighborhood->kind == NeighborhoodKind::circumball);
  CHECK(parse_functional("subgraph:3:0-1,1-2", 0.1).functional.k == 3);
  CHECK_THROWS_AS(parse_functional("clique", 0.1), ConfigError);
  CHECK_THROWS_AS(parse_functional("clique:2:sphere", 0.1), ConfigError);
  CHECK_THROWS_AS(parse_functional("triangle:3", 0.1), ConfigError);
}
