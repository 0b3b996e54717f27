#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdgeom/geometry.hpp"
#include "bdgeom/process.hpp"

namespace bdgeom {

/// Simple undirected graph on k <= 8 labelled vertices.
class SmallGraph {
 public:
  static constexpr int kMaxVertices = 8;

  explicit SmallGraph(int k);
  /// Edge list like "0-1,1-2".
  static SmallGraph parse(int k, const std::string& edges);
  static SmallGraph complete(int k);

  int size() const { return k_; }
  void add_edge(int a, int b);
  bool has_edge(int a, int b) const;
  int edge_count() const;
  bool connected() const;
  /// Longest shortest path, in hops. Requires a connected graph.
  int hop_diameter() const;
  /// Minimum adjacency bitstring over all vertex relabelings.
  std::uint64_t canonical_form() const;
  std::uint64_t bits() const { return bits_; }
  std::string to_string() const;

 private:
  static int bit(int a, int b) { return a < b ? a * kMaxVertices + b : b * kMaxVertices + a; }
  int k_;
  std::uint64_t bits_ = 0;
};

/// The geometric graph G(S, r), closed-ball edges.
SmallGraph geometric_graph(std::span<const Position> points, double r);

enum class FunctionalKind { clique, subgraph, morse, custom };

/// Circumradius window (lo*r, hi*r] used by the Morse functional.
struct MorseRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// xi_{k,r}: a non-negative function of k-point sets that vanishes when
/// the set has the wrong size or diameter above r_max * r. Points are passed
/// in one Euclidean chart (see local_chart).
struct LocalFunctional {
  using Kernel = std::function<double(std::span<const Position>, double r)>;

  FunctionalKind kind = FunctionalKind::custom;
  std::string name;
  int k = 2;
  double r = 1.0;
  double r_max = 1.0;
  double xi_sup = 1.0;
  Kernel xi;

  double operator()(std::span<const Position> s) const { return xi(s, r); }
  double at_radius(std::span<const Position> s, double radius) const { return xi(s, radius); }
  LocalFunctional with_radius(double radius) const;
  /// Pairwise edge indicator (2-cliques).
  bool is_edge() const { return kind == FunctionalKind::clique && k == 2; }
};

double clique_indicator(std::span<const Position> s, int k, double r);
double clique_indicator(std::span<const Position> s, int k, double r, const Metric& m);
/// 1 iff G(S, r) is isomorphic to `pattern` (induced copy).
double subgraph_indicator(std::span<const Position> s, double r, const SmallGraph& pattern);
/// 1 iff the circumcenter lies in the open simplex spanned by S and the
/// circumradius lies in the range. Degenerate S evaluates to 0.
double morse_indicator(std::span<const Position> s, double r, MorseRange range = {});

LocalFunctional make_clique(int k, double r);
LocalFunctional make_subgraph(const SmallGraph& pattern, double r);
/// k is the subset size, i.e. Morse index + 1.
LocalFunctional make_morse(int k, double r, MorseRange range = {});

enum class NeighborhoodKind { none, balls, circumball };

/// A measurable region N_r(S) in the chart of S.
class Region {
 public:
  static Region ball_union(std::vector<Position> centers, double radius);
  static Region open_ball(Position center, double radius);

  bool contains(const Position& x) const;
  /// Ball containing the region.
  Ball bounding_ball() const;
  const Position& anchor() const { return centers_.front(); }
  std::span<const Position> centers() const { return centers_; }
  double radius() const { return radius_; }
  bool is_open() const { return open_; }

 private:
  std::vector<Position> centers_;
  double radius_ = 0.0;
  bool open_ = false;
};

struct NeighborhoodMap {
  NeighborhoodKind kind = NeighborhoodKind::balls;
  /// diam(N_r(S)) <= beta_k * max(r, diam(S)).
  double beta_k = 3.0;

  /// Builds N_r(S) from points given in one chart.
  Region build(std::span<const Position> s, double r) const;
};

NeighborhoodMap make_neighborhood(NeighborhoodKind kind, const LocalFunctional& f);
std::string to_string(NeighborhoodKind kind);

/// True iff no point of cfg outside `exclude` lies in `region`.
bool region_empty(const Region& region, const Configuration& cfg, std::span<const PointId> exclude);

/// N_r(S) = union of closed r-balls around S contains no other point of cfg.
bool ball_union_empty(std::span<const Position> s, double r, const Configuration& cfg, std::span<const PointId> exclude);

/// Smallest grid cell for trackers of (f, N): r * max(r_max, beta_k).
double required_cell_size(const LocalFunctional& f, const std::optional<NeighborhoodMap>& nbhd);

struct FunctionalSelection {
  LocalFunctional functional;
  std::optional<NeighborhoodMap> neighborhood;
};

/// "clique:k", "subgraph:k:0-1,1-2", "morse:k", each optionally followed by
/// ":balls", ":circumball" or ":none".
FunctionalSelection parse_functional(const std::string& selector, double r);

struct AssumptionReport {
  std::size_t trials = 0;
  double max_invariance_error = 0.0;
  std::size_t invariance_violations = 0;
  std::size_t locality_violations = 0;
  std::size_t bound_violations = 0;
  /// Fraction of trials with xi > 0; feasibility cannot be certified by
  /// sampling, only flagged when no trial hits.
  double positive_fraction = 0.0;
  bool zero_hit = false;

  bool clean() const { return invariance_violations == 0 && locality_violations == 0 && bound_violations == 0; }
};

/// Randomized checks of translation/scale invariance, localization and
/// boundedness over `trials` random (S, alpha, x).
AssumptionReport validate_assumptions(const LocalFunctional& f, std::size_t trials, std::uint64_t seed, int dim = 2);

}  // namespace bdgeom
