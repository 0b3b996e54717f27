#include "bdgeom/functionals.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bdgeom {

SmallGraph::SmallGraph(int k) : k_(k) {
  if (k < 1 || k > kMaxVertices) throw ConfigError("graph: vertex count must be 1..8");
}

SmallGraph SmallGraph::parse(int k, const std::string& edges) {
  SmallGraph g(k);
  std::stringstream ss(edges);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw ConfigError("graph: malformed edge '" + item + "'");
    int a = 0, b = 0;
    try {
      a = std::stoi(item.substr(0, dash));
      b = std::stoi(item.substr(dash + 1));
    } catch (const std::exception&) {
      throw ConfigError("graph: malformed edge '" + item + "'");
    }
    g.add_edge(a, b);
  }
  return g;
}

SmallGraph SmallGraph::complete(int k) {
  SmallGraph g(k);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) g.add_edge(a, b);
  return g;
}

void SmallGraph::add_edge(int a, int b) {
  if (a < 0 || b < 0 || a >= k_ || b >= k_ || a == b) throw ConfigError("graph: edge endpoints out of range");
  bits_ |= std::uint64_t{1} << bit(a, b);
}

bool SmallGraph::has_edge(int a, int b) const { return a != b && ((bits_ >> bit(a, b)) & 1U); }

int SmallGraph::edge_count() const { return std::popcount(bits_); }

bool SmallGraph::connected() const {
  unsigned seen = 1U, frontier = 1U;
  while (frontier) {
    unsigned next = 0;
    for (int a = 0; a < k_; ++a) {
      if (!(frontier >> a & 1U)) continue;
      for (int b = 0; b < k_; ++b)
        if (has_edge(a, b) && !(seen >> b & 1U)) next |= 1U << b;
    }
    seen |= next;
    frontier = next;
  }
  return seen == (1U << k_) - 1U;
}

int SmallGraph::hop_diameter() const {
  int best = 0;
  for (int s = 0; s < k_; ++s) {
    std::array<int, kMaxVertices> dist;
    dist.fill(-1);
    dist[s] = 0;
    std::vector<int> queue{s};
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int a = queue[h];
      for (int b = 0; b < k_; ++b)
        if (has_edge(a, b) && dist[b] < 0) {
          dist[b] = dist[a] + 1;
          queue.push_back(b);
        }
    }
    for (int b = 0; b < k_; ++b) {
      if (dist[b] < 0) throw ConfigError("graph: hop diameter of a disconnected graph");
      best = std::max(best, dist[b]);
    }
  }
  return best;
}

std::uint64_t SmallGraph::canonical_form() const {
  std::array<int, kMaxVertices> perm;
  std::iota(perm.begin(), perm.begin() + k_, 0);
  std::uint64_t best = ~std::uint64_t{0};
  do {
    std::uint64_t m = 0;
    for (int a = 0; a < k_; ++a)
      for (int b = a + 1; b < k_; ++b)
        if (has_edge(a, b)) m |= std::uint64_t{1} << bit(perm[a], perm[b]);
    best = std::min(best, m);
  } while (std::next_permutation(perm.begin(), perm.begin() + k_));
  return best;
}

std::string SmallGraph::to_string() const {
  std::string out;
  for (int a = 0; a < k_; ++a)
    for (int b = a + 1; b < k_; ++b)
      if (has_edge(a, b)) {
        if (!out.empty()) out += ',';
        out += std::to_string(a) + "-" + std::to_string(b);
      }
  return out;
}

SmallGraph geometric_graph(std::span<const Position> points, double r) {
  SmallGraph g(static_cast<int>(points.size()));
  const double r2 = r * r;
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      if ((points[a] - points[b]).squared_norm() <= r2) g.add_edge(static_cast<int>(a), static_cast<int>(b));
  return g;
}

// ---------------------------------------------------------------------------

double clique_indicator(std::span<const Position> s, int k, double r) {
  if (static_cast<int>(s.size()) != k) return 0.0;
  const double r2 = r * r;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b)
      if ((s[a] - s[b]).squared_norm() > r2) return 0.0;
  return 1.0;
}

double clique_indicator(std::span<const Position> s, int k, double r, const Metric& m) {
  const auto chart = local_chart(s, m);
  return clique_indicator(chart, k, r);
}

namespace {

std::array<int, SmallGraph::kMaxVertices> sorted_degrees(const SmallGraph& g) {
  std::array<int, SmallGraph::kMaxVertices> deg{};
  for (int a = 0; a < g.size(); ++a)
    for (int b = 0; b < g.size(); ++b) deg[a] += g.has_edge(a, b) ? 1 : 0;
  std::sort(deg.begin(), deg.begin() + g.size());
  return deg;
}

}  // namespace

double subgraph_indicator(std::span<const Position> s, double r, const SmallGraph& pattern) {
  if (static_cast<int>(s.size()) != pattern.size()) return 0.0;
  const SmallGraph g = geometric_graph(s, r);
  if (g.edge_count() != pattern.edge_count()) return 0.0;
  if (g.bits() == pattern.bits()) return 1.0;
  if (sorted_degrees(g) != sorted_degrees(pattern)) return 0.0;
  return g.canonical_form() == pattern.canonical_form() ? 1.0 : 0.0;
}

double morse_indicator(std::span<const Position> s, double r, MorseRange range) {
  if (s.empty()) return 0.0;
  Circumball cb;
  try {
    cb = circumball(s);
  } catch (const DegenerateGeometry&) {
    return 0.0;
  }
  if (!cb.center_in_open_simplex) return 0.0;
  const double radius = cb.ball.radius;
  return (radius > range.lo * r && radius <= range.hi * r) ? 1.0 : 0.0;
}

LocalFunctional LocalFunctional::with_radius(double radius) const {
  LocalFunctional out = *this;
  out.r = radius;
  return out;
}

LocalFunctional make_clique(int k, double r) {
  if (k < 1 || k > SmallGraph::kMaxVertices) throw ConfigError("clique: k must be 1..8");
  LocalFunctional f;
  f.kind = FunctionalKind::clique;
  f.name = "clique:" + std::to_string(k);
  f.k = k;
  f.r = r;
  f.r_max = 1.0;
  f.xi_sup = 1.0;
  f.xi = [k](std::span<const Position> s, double radius) { return clique_indicator(s, k, radius); };
  return f;
}

LocalFunctional make_subgraph(const SmallGraph& pattern, double r) {
  if (!pattern.connected()) throw ConfigError("subgraph: pattern graph must be connected");
  LocalFunctional f;
  f.kind = FunctionalKind::subgraph;
  f.name = "subgraph:" + std::to_string(pattern.size()) + ":" + pattern.to_string();
  f.k = pattern.size();
  f.r = r;
  f.r_max = std::max(1, pattern.hop_diameter());
  f.xi_sup = 1.0;
  f.xi = [pattern](std::span<const Position> s, double radius) { return subgraph_indicator(s, radius, pattern); };
  return f;
}

LocalFunctional make_morse(int k, double r, MorseRange range) {
  if (k < 1 || k > kMaxDim + 1) throw ConfigError("morse: subset size must be 1..d+1");
  if (!(range.hi > range.lo) || range.lo < 0.0) throw ConfigError("morse: invalid radius range");
  LocalFunctional f;
  f.kind = FunctionalKind::morse;
  f.name = "morse:" + std::to_string(k);
  f.k = k;
  f.r = r;
  f.r_max = 2.0 * range.hi;
  f.xi_sup = 1.0;
  f.xi = [k, range](std::span<const Position> s, double radius) {
    if (static_cast<int>(s.size()) != k || k > s.front().dim() + 1) return 0.0;
    return morse_indicator(s, radius, range);
  };
  return f;
}

// ---------------------------------------------------------------------------

Region Region::ball_union(std::vector<Position> centers, double radius) {
  detail::require(!centers.empty(), "Region: empty center list");
  Region out;
  out.centers_ = std::move(centers);
  out.radius_ = radius;
  out.open_ = false;
  return out;
}

Region Region::open_ball(Position center, double radius) {
  Region out;
  out.centers_ = {center};
  out.radius_ = radius;
  out.open_ = true;
  return out;
}

bool Region::contains(const Position& x) const {
  if (open_) {
    // Open ball: the defining points sit on the sphere and are excluded.
    return (x - centers_.front()).norm() < radius_ - kGeomTol;
  }
  const double r2 = radius_ * radius_;
  for (const auto& c : centers_)
    if ((x - c).squared_norm() <= r2) return true;
  return false;
}

Ball Region::bounding_ball() const {
  Ball b;
  b.center = centers_.front();
  double reach = 0.0;
  for (const auto& c : centers_) reach = std::max(reach, (c - centers_.front()).norm());
  b.radius = reach + radius_;
  b.on_boundary_count = 0;
  return b;
}

Region NeighborhoodMap::build(std::span<const Position> s, double r) const {
  switch (kind) {
    case NeighborhoodKind::balls:
      return Region::ball_union(std::vector<Position>(s.begin(), s.end()), r);
    case NeighborhoodKind::circumball: {
      Circumball cb;
      try {
        cb = circumball(s);
      } catch (const DegenerateGeometry&) {
        // Measure-zero input; an empty region never blocks.
        return Region::open_ball(s.front(), 0.0);
      }
      return Region::open_ball(cb.ball.center, cb.ball.radius);
    }
    case NeighborhoodKind::none:
      break;
  }
  throw ContractViolation("NeighborhoodMap: kind 'none' has no region");
}

NeighborhoodMap make_neighborhood(NeighborhoodKind kind, const LocalFunctional& f) {
  NeighborhoodMap n;
  n.kind = kind;
  switch (kind) {
    case NeighborhoodKind::balls:
      n.beta_k = 3.0;
      break;
    case NeighborhoodKind::circumball:
      // Circumradius <= r_max * r / 2 gives diam <= r_max * r.
      n.beta_k = std::max(2.0, f.r_max);
      break;
    case NeighborhoodKind::none:
      n.beta_k = 0.0;
      break;
  }
  return n;
}

std::string to_string(NeighborhoodKind kind) {
  switch (kind) {
    case NeighborhoodKind::balls: return "balls";
    case NeighborhoodKind::circumball: return "circumball";
    case NeighborhoodKind::none: return "none";
  }
  return "none";
}

bool region_empty(const Region& region, const Configuration& cfg, std::span<const PointId> exclude) {
  const Ball bb = region.bounding_ball();
  if (bb.radius <= 0.0) return true;
  const Metric& m = cfg.metric();
  bool empty = true;
  cfg.index().for_each_within(m.wrap(bb.center), bb.radius, [&](PointId id, const Position& p) {
    if (!empty) return;
    if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) return;
    if (region.contains(m.unwrap_near(bb.center, p))) empty = false;
  });
  return empty;
}

bool ball_union_empty(std::span<const Position> s, double r, const Configuration& cfg, std::span<const PointId> exclude) {
  const auto chart = local_chart(s, cfg.metric());
  return region_empty(Region::ball_union(chart, r), cfg, exclude);
}

double required_cell_size(const LocalFunctional& f, const std::optional<NeighborhoodMap>& nbhd) {
  double factor = f.r_max;
  if (nbhd && nbhd->kind != NeighborhoodKind::none) factor = std::max(factor, nbhd->beta_k);
  return f.r * factor;
}

// ---------------------------------------------------------------------------

FunctionalSelection parse_functional(const std::string& selector, double r) {
  std::vector<std::string> parts;
  std::stringstream ss(selector);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 2) throw ConfigError("functional: expected 'kind:k[...]', got '" + selector + "'");

  std::optional<NeighborhoodKind> nk;
  auto tail_neighborhood = [&](std::size_t used) {
    if (parts.size() == used) return;
    if (parts.size() != used + 1) throw ConfigError("functional: trailing fields in '" + selector + "'");
    const auto& s = parts.back();
    if (s == "balls") nk = NeighborhoodKind::balls;
    else if (s == "circumball") nk = NeighborhoodKind::circumball;
    else if (s == "none") nk = NeighborhoodKind::none;
    else throw ConfigError("functional: unknown neighborhood '" + s + "'");
  };

  int k = 0;
  try {
    k = std::stoi(parts[1]);
  } catch (const std::exception&) {
    throw ConfigError("functional: k is not an integer in '" + selector + "'");
  }

  FunctionalSelection out;
  if (parts[0] == "clique") {
    out.functional = make_clique(k, r);
    tail_neighborhood(2);
  } else if (parts[0] == "subgraph") {
    if (parts.size() < 3) throw ConfigError("functional: subgraph needs an edge list");
    out.functional = make_subgraph(SmallGraph::parse(k, parts[2]), r);
    tail_neighborhood(3);
  } else if (parts[0] == "morse") {
    out.functional = make_morse(k, r);
    tail_neighborhood(2);
  } else {
    throw ConfigError("functional: unknown kind '" + parts[0] + "'");
  }
  if (nk && *nk != NeighborhoodKind::none) out.neighborhood = make_neighborhood(*nk, out.functional);
  return out;
}

// ---------------------------------------------------------------------------

AssumptionReport validate_assumptions(const LocalFunctional& f, std::size_t trials, std::uint64_t seed, int dim) {
  AssumptionReport rep;
  rep.trials = trials;
  CounterRng rng(seed, 0xA55);
  const double r = f.r;
  const double reach = std::isfinite(f.r_max) ? f.r_max * r : 4.0 * r;
  std::size_t hits = 0;
  std::vector<Position> s(static_cast<std::size_t>(f.k)), moved(static_cast<std::size_t>(f.k));

  for (std::size_t t = 0; t < trials; ++t) {
    // Alternate tight, typical and wide sets so that all three checks see
    // both zero and non-zero values.
    const double spread = (t % 3 == 0 ? 0.5 : t % 3 == 1 ? 1.0 : 2.0) * reach;
    for (auto& p : s) {
      p = Position(dim);
      double norm2;
      do {
        norm2 = 0.0;
        for (int i = 0; i < dim; ++i) {
          p[i] = rng.uniform(-1.0, 1.0);
          norm2 += p[i] * p[i];
        }
      } while (norm2 > 1.0);
      p *= spread;
    }
    const double alpha = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    Position shift(dim);
    for (int i = 0; i < dim; ++i) shift[i] = rng.uniform(-10.0, 10.0);
    for (std::size_t i = 0; i < s.size(); ++i) moved[i] = alpha * s[i] + shift;

    const double base = f.at_radius(s, r / alpha);
    const double image = f.at_radius(moved, r);
    const double err = std::abs(image - base);
    rep.max_invariance_error = std::max(rep.max_invariance_error, err);
    if (err > 0.0) ++rep.invariance_violations;

    const double v = f.at_radius(s, r);
    if (v > 0.0) ++hits;
    if (v != 0.0 && diameter(s) > f.r_max * r) ++rep.locality_violations;
    if (v < 0.0 || v > f.xi_sup || !std::isfinite(v)) ++rep.bound_violations;
  }
  rep.positive_fraction = trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  rep.zero_hit = hits == 0;
  return rep;
}

}  // namespace bdgeom
