#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "bdgeom/geometry.hpp"
#include "bdgeom/rng.hpp"

namespace bdgeom {

struct UniformTorus {};

/// Isotropic Gaussian on R^d, simulated without a window.
struct GaussianDensity {
  double sigma = 0.1;
};

/// Piecewise-constant density on the unit torus: `cells_per_dim`^d cells,
/// values in row-major order with the first coordinate fastest.
struct TableDensity {
  int cells_per_dim = 1;
  std::vector<double> values;
};

/// The spatial density q of births (and of the stationary configuration).
class Density {
 public:
  using Spec = std::variant<UniformTorus, GaussianDensity, TableDensity>;

  Density(Spec spec, int dim);
  static Density uniform(int dim) { return Density(UniformTorus{}, dim); }

  int dim() const { return dim_; }
  const Spec& spec() const { return spec_; }
  bool is_uniform_torus() const { return std::holds_alternative<UniformTorus>(spec_); }
  Metric metric() const;
  std::string describe() const;

  Position sample(CounterRng& rng) const;
  double pdf(const Position& x) const;
  /// Closed form of the integral of q^m over the domain.
  double integral_power(double m) const;
  double sup() const;

 private:
  Spec spec_;
  int dim_;
  std::vector<double> cumulative_;
};

struct SimulationConfig {
  double n = 100.0;
  int dim = 2;
  Density::Spec density = UniformTorus{};
  double horizon = 1.0;
  std::uint64_t seed = 1;
  /// Target n r^d; when set, r = (gamma / n)^(1/d).
  std::optional<double> gamma;
  /// Explicit interaction radius, used only when gamma is unset.
  std::optional<double> radius;

  void validate() const;
  Density make_density() const { return Density(density, dim); }
  Metric metric() const { return make_density().metric(); }
  double interaction_radius() const;
};

struct MarkedPoint {
  PointId id = 0;
  Position position;
  double birth = 0.0;
  double lifetime = 1.0;
};

/// The alive point set at one time instant, indexed by a uniform grid.
/// Keeps a dense id array for O(1) uniform selection (swap-remove).
class Configuration {
 public:
  Configuration(Metric metric, double cell_size);

  const Metric& metric() const { return index_.metric(); }
  const GridIndex& index() const { return index_; }
  double cell_size() const { return index_.cell_size(); }
  std::size_t size() const { return alive_.size(); }
  bool empty() const { return alive_.empty(); }
  bool contains(PointId id) const { return slot_.count(id) != 0; }

  void insert(const MarkedPoint& p);
  MarkedPoint erase(PointId id);
  const MarkedPoint& point(PointId id) const;
  const Position& position(PointId id) const { return point(id).position; }
  PointId id_at(std::size_t i) const { return alive_[i].id; }
  const std::vector<MarkedPoint>& points() const { return alive_; }
  std::vector<PointId> ids() const;

  std::vector<PointId> neighbors_within(const Position& x, double rho) const { return index_.neighbors_within(x, rho); }

  /// Same points, re-indexed with a different cell size.
  Configuration reindexed(double cell_size) const;

 private:
  GridIndex index_;
  std::vector<MarkedPoint> alive_;
  std::unordered_map<PointId, std::size_t> slot_;
};

enum class EventKind { birth, death };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::birth;
  MarkedPoint point;
};

using EventStream = std::vector<Event>;

/// Poisson(n) many i.i.d. q-distributed points, all born at time 0 with
/// Exp(1) lifetimes. Ids start at 0.
Configuration sample_stationary(const SimulationConfig& cfg, CounterRng& rng, double cell_size);

/// Competing-clocks birth-death dynamics: from state with m alive points the
/// next event comes after Exp(n + m); it is a birth with probability n/(n+m),
/// otherwise a uniformly chosen alive point dies.
class BirthDeathEngine {
 public:
  BirthDeathEngine(const SimulationConfig& cfg, Configuration initial, CounterRng rng);

  /// Draws the next event without applying it. Returns nullopt, and parks
  /// the clock at the horizon, once the next event would fall after it.
  std::optional<Event> propose();
  void commit(const Event& e);

  const Configuration& configuration() const { return config_; }
  double time() const { return time_; }
  double horizon() const { return horizon_; }

 private:
  double n_;
  double horizon_;
  Density density_;
  Configuration config_;
  CounterRng rng_;
  double time_ = 0.0;
  PointId next_id_ = 0;
  bool pending_ = false;
};

/// Events on [0, horizon]. Lifetimes in the returned MarkedPoints are filled
/// after the run: death time minus birth, or, for points still alive at the
/// horizon, the elapsed age plus an independent Exp(1) residual.
EventStream simulate_events(const SimulationConfig& cfg, const Configuration& initial, CounterRng& rng);

/// Static representation of all points alive during [0, T].
struct MarkedProcess {
  double horizon = 0.0;
  Metric metric;
  std::vector<MarkedPoint> points;
};

/// Poisson process with intensity n(1+T)q; birth = 0 with probability
/// 1/(1+T), else U[0,T]; lifetime Exp(1).
MarkedProcess sample_marked(const SimulationConfig& cfg, CounterRng& rng);

/// Points with birth <= t < birth + lifetime.
Configuration slice(const MarkedProcess& marked, double t, double cell_size);

/// CSV export: time,kind,id,x1..xd,lifetime
std::string event_log_csv(const EventStream& events, int dim);

}  // namespace bdgeom
