#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bdgeom/functionals.hpp"
#include "bdgeom/process.hpp"

namespace bdgeom {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Sorted ids of a k-subset, k <= 8.
struct SubsetKey {
  std::array<PointId, SmallGraph::kMaxVertices> ids{};
  std::uint8_t k = 0;

  friend bool operator==(const SubsetKey&, const SubsetKey&) = default;
};

struct SubsetKeyHash {
  std::size_t operator()(const SubsetKey& key) const noexcept;
};

/// Sampled path of one statistic in one replication.
struct TimeSeries {
  std::uint64_t replication = 0;
  std::vector<double> times;
  std::vector<double> values;
};

/// Maintains f_n (plain mode) or F_n (exclusive mode, when a neighborhood
/// map is given) under births and deaths.
///
/// Exclusive mode keeps a registry of every subset with xi > 0 together with
/// its vacancy state. A birth can create positive subsets and occupy
/// neighborhoods of existing ones; a death removes the subsets it belonged to
/// and re-derives vacancy, by a grid query, for entries whose region held it.
class StatisticTracker {
 public:
  /// Builds the tracker from scratch on `cfg`; its index cell must be at
  /// least required_cell_size(f, nbhd).
  StatisticTracker(const Configuration& cfg, LocalFunctional f, std::optional<NeighborhoodMap> nbhd = std::nullopt);

  double value() const { return sum_.value(); }
  bool exclusive() const { return nbhd_.has_value(); }
  const LocalFunctional& functional() const { return f_; }
  std::size_t registry_size() const { return registry_.size(); }

  /// `cfg` must be the state immediately before `e`.
  void apply_event(const Event& e, const Configuration& cfg);

 private:
  struct Entry {
    double xi = 0.0;
    bool vacant = false;
    Region region;
  };

  void plain_birth(const MarkedPoint& p, const Configuration& cfg);
  void plain_death(const MarkedPoint& p, const Configuration& cfg);
  void exclusive_birth(const MarkedPoint& p, const Configuration& cfg);
  void exclusive_death(const MarkedPoint& p, const Configuration& cfg);
  void add_entry(const SubsetKey& key, double xi, std::span<const Position> chart, const Configuration& cfg);
  void drop_entry(const SubsetKey& key);

  LocalFunctional f_;
  std::optional<NeighborhoodMap> nbhd_;
  double reach_ = 0.0;
  CompensatedSum sum_;
  std::unordered_map<SubsetKey, Entry, SubsetKeyHash> registry_;
  std::unordered_map<PointId, std::vector<SubsetKey>> membership_;
};

/// Distance from any point of S to any point of N_r(S), for subsets with
/// diameter <= r_max * r.
double neighborhood_reach(const LocalFunctional& f, const NeighborhoodMap& nbhd);

/// Minimum index cell for tracking (f, nbhd).
double tracker_cell_size(const LocalFunctional& f, const std::optional<NeighborhoodMap>& nbhd);

/// Calls fn(ids, chart) for every k-subset with diameter <= r_max * r,
/// enumerated through the grid. `chart` is anchored at the smallest id.
template <class Fn>
void for_each_local_subset(const Configuration& cfg, int k, double radius, Fn&& fn);

/// f_n on cfg, from scratch.
double plain_value(const Configuration& cfg, const LocalFunctional& f);
/// F_n on cfg, from scratch.
double exclusive_value(const Configuration& cfg, const LocalFunctional& f, const NeighborhoodMap& nbhd);

/// Runs one stationary replication and records the tracked statistic at
/// each sample time (value after all events at or before it).
TimeSeries sample_path(const SimulationConfig& cfg, const FunctionalSelection& sel, std::span<const double> sample_times,
                       std::uint64_t replication);

/// CSV: rep,t,value
std::string paths_csv(std::span<const TimeSeries> paths);

// ---------------------------------------------------------------------------

namespace detail {

template <class Fn>
void for_each_combination(std::span<const PointId> pool, int choose, std::vector<PointId>& picked, std::size_t start, Fn& fn) {
  if (choose == 0) {
    fn(std::span<const PointId>(picked));
    return;
  }
  for (std::size_t i = start; i + static_cast<std::size_t>(choose) <= pool.size(); ++i) {
    picked.push_back(pool[i]);
    for_each_combination(pool, choose - 1, picked, i + 1, fn);
    picked.pop_back();
  }
}

}  // namespace detail

template <class Fn>
void for_each_local_subset(const Configuration& cfg, int k, double radius, Fn&& fn) {
  const Metric& m = cfg.metric();
  std::vector<PointId> pool, picked;
  std::vector<Position> chart;
  std::vector<PointId> ids;
  for (const auto& p : cfg.points()) {
    pool.clear();
    cfg.index().for_each_within(p.position, radius, [&](PointId id, const Position&) {
      if (id > p.id) pool.push_back(id);
    });
    std::sort(pool.begin(), pool.end());
    auto visit = [&](std::span<const PointId> rest) {
      ids.assign(1, p.id);
      ids.insert(ids.end(), rest.begin(), rest.end());
      chart.assign(1, p.position);
      for (PointId q : rest) chart.push_back(m.unwrap_near(p.position, cfg.position(q)));
      fn(std::span<const PointId>(ids), std::span<const Position>(chart));
    };
    detail::for_each_combination(std::span<const PointId>(pool), k - 1, picked, 0, visit);
  }
}

}  // namespace bdgeom
