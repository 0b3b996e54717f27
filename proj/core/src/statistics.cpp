#include "bdgeom/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bdgeom {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    carry_ += (sum_ - t) + x;
  else
    carry_ += (x - t) + sum_;
  sum_ = t;
}

std::size_t SubsetKeyHash::operator()(const SubsetKey& key) const noexcept {
  std::uint64_t h = key.k;
  for (std::uint8_t i = 0; i < key.k; ++i) h = mix64(h ^ (key.ids[i] + 0x9E3779B97F4A7C15ULL));
  return static_cast<std::size_t>(h);
}

namespace {

SubsetKey make_key(std::span<const PointId> ids) {
  SubsetKey key;
  key.k = static_cast<std::uint8_t>(ids.size());
  std::copy(ids.begin(), ids.end(), key.ids.begin());
  std::sort(key.ids.begin(), key.ids.begin() + key.k);
  return key;
}

// Enumerates S = {p} + C over (k-1)-subsets C of `pool`, calling
// fn(ids, chart) with the chart anchored at p.
template <class Fn>
void for_each_subset_with(const MarkedPoint& p, std::span<const PointId> pool, int k, const Configuration& cfg, Fn&& fn) {
  const Metric& m = cfg.metric();
  std::vector<PointId> picked, ids;
  std::vector<Position> chart;
  auto visit = [&](std::span<const PointId> rest) {
    ids.assign(1, p.id);
    ids.insert(ids.end(), rest.begin(), rest.end());
    chart.assign(1, p.position);
    for (PointId q : rest) chart.push_back(m.unwrap_near(p.position, cfg.position(q)));
    fn(std::span<const PointId>(ids), std::span<const Position>(chart));
  };
  detail::for_each_combination(pool, k - 1, picked, 0, visit);
}

std::vector<PointId> sorted_neighbors(const Configuration& cfg, const Position& x, double rho, PointId skip) {
  std::vector<PointId> out;
  cfg.index().for_each_within(x, rho, [&](PointId id, const Position&) {
    if (id != skip) out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double neighborhood_reach(const LocalFunctional& f, const NeighborhoodMap& nbhd) {
  switch (nbhd.kind) {
    case NeighborhoodKind::balls: return (f.r_max + 1.0) * f.r;
    case NeighborhoodKind::circumball: return f.r_max * f.r;
    case NeighborhoodKind::none: return 0.0;
  }
  return 0.0;
}

double tracker_cell_size(const LocalFunctional& f, const std::optional<NeighborhoodMap>& nbhd) {
  double cell = required_cell_size(f, nbhd);
  if (nbhd && nbhd->kind != NeighborhoodKind::none) cell = std::max(cell, neighborhood_reach(f, *nbhd));
  return cell;
}

// ---------------------------------------------------------------------------

StatisticTracker::StatisticTracker(const Configuration& cfg, LocalFunctional f, std::optional<NeighborhoodMap> nbhd)
    : f_(std::move(f)), nbhd_(std::move(nbhd)) {
  if (nbhd_ && nbhd_->kind == NeighborhoodKind::none) nbhd_.reset();
  if (cfg.cell_size() < tracker_cell_size(f_, nbhd_) * (1.0 - 1e-12))
    throw ContractViolation("StatisticTracker: configuration index cell is smaller than the functional's reach");
  if (nbhd_) reach_ = neighborhood_reach(f_, *nbhd_);

  for_each_local_subset(cfg, f_.k, f_.r_max * f_.r, [&](std::span<const PointId> ids, std::span<const Position> chart) {
    const double xi = f_(chart);
    if (xi == 0.0) return;
    if (nbhd_)
      add_entry(make_key(ids), xi, chart, cfg);
    else
      sum_.add(xi);
  });
}

void StatisticTracker::apply_event(const Event& e, const Configuration& cfg) {
  if (e.kind == EventKind::birth) {
    if (cfg.contains(e.point.id)) throw ContractViolation("apply_event: birth of an id that is already alive");
    nbhd_ ? exclusive_birth(e.point, cfg) : plain_birth(e.point, cfg);
  } else {
    if (!cfg.contains(e.point.id)) throw ContractViolation("apply_event: death of unknown id");
    const MarkedPoint& alive = cfg.point(e.point.id);
    nbhd_ ? exclusive_death(alive, cfg) : plain_death(alive, cfg);
  }
}

void StatisticTracker::plain_birth(const MarkedPoint& p, const Configuration& cfg) {
  const MarkedPoint q{p.id, cfg.metric().wrap(p.position), p.birth, p.lifetime};
  const auto pool = sorted_neighbors(cfg, q.position, f_.r_max * f_.r, q.id);
  for_each_subset_with(q, pool, f_.k, cfg, [&](std::span<const PointId>, std::span<const Position> chart) {
    const double xi = f_(chart);
    if (xi != 0.0) sum_.add(xi);
  });
}

void StatisticTracker::plain_death(const MarkedPoint& p, const Configuration& cfg) {
  const auto pool = sorted_neighbors(cfg, p.position, f_.r_max * f_.r, p.id);
  for_each_subset_with(p, pool, f_.k, cfg, [&](std::span<const PointId>, std::span<const Position> chart) {
    const double xi = f_(chart);
    if (xi != 0.0) sum_.add(-xi);
  });
}

void StatisticTracker::add_entry(const SubsetKey& key, double xi, std::span<const Position> chart, const Configuration& cfg) {
  Entry entry{xi, false, nbhd_->build(chart, f_.r)};
  entry.vacant = region_empty(entry.region, cfg, std::span<const PointId>(key.ids.data(), key.k));
  if (entry.vacant) sum_.add(xi);
  for (std::uint8_t i = 0; i < key.k; ++i) membership_[key.ids[i]].push_back(key);
  registry_.emplace(key, std::move(entry));
}

void StatisticTracker::drop_entry(const SubsetKey& key) {
  auto it = registry_.find(key);
  if (it == registry_.end()) return;
  if (it->second.vacant) sum_.add(-it->second.xi);
  for (std::uint8_t i = 0; i < key.k; ++i) {
    auto m = membership_.find(key.ids[i]);
    if (m == membership_.end()) continue;
    auto& v = m->second;
    v.erase(std::remove(v.begin(), v.end(), key), v.end());
    if (v.empty()) membership_.erase(m);
  }
  registry_.erase(it);
}

void StatisticTracker::exclusive_birth(const MarkedPoint& p, const Configuration& cfg) {
  const Metric& m = cfg.metric();
  const Position x = m.wrap(p.position);

  // Occupy existing neighborhoods.
  cfg.index().for_each_within(x, reach_, [&](PointId q, const Position&) {
    auto mem = membership_.find(q);
    if (mem == membership_.end()) return;
    for (const auto& key : mem->second) {
      auto& entry = registry_.at(key);
      if (!entry.vacant) continue;
      if (entry.region.contains(m.unwrap_near(entry.region.anchor(), x))) {
        entry.vacant = false;
        sum_.add(-entry.xi);
      }
    }
  });

  // New positive subsets containing p. The region query runs on cfg, which
  // does not hold p yet; p belongs to S and is excluded anyway.
  const MarkedPoint q{p.id, x, p.birth, p.lifetime};
  const auto pool = sorted_neighbors(cfg, x, f_.r_max * f_.r, p.id);
  for_each_subset_with(q, pool, f_.k, cfg, [&](std::span<const PointId> ids, std::span<const Position> chart) {
    const double xi = f_(chart);
    if (xi != 0.0) add_entry(make_key(ids), xi, chart, cfg);
  });
}

void StatisticTracker::exclusive_death(const MarkedPoint& p, const Configuration& cfg) {
  const Metric& m = cfg.metric();
  if (auto mem = membership_.find(p.id); mem != membership_.end()) {
    const auto owned = mem->second;
    for (const auto& key : owned) drop_entry(key);
  }

  std::vector<PointId> exclude;
  cfg.index().for_each_within(p.position, reach_, [&](PointId q, const Position&) {
    if (q == p.id) return;
    auto mem = membership_.find(q);
    if (mem == membership_.end()) return;
    for (const auto& key : mem->second) {
      auto& entry = registry_.at(key);
      if (entry.vacant) continue;
      if (!entry.region.contains(m.unwrap_near(entry.region.anchor(), p.position))) continue;
      exclude.assign(key.ids.begin(), key.ids.begin() + key.k);
      exclude.push_back(p.id);
      if (region_empty(entry.region, cfg, exclude)) {
        entry.vacant = true;
        sum_.add(entry.xi);
      }
    }
  });
}

// ---------------------------------------------------------------------------

double plain_value(const Configuration& cfg, const LocalFunctional& f) {
  CompensatedSum s;
  for_each_local_subset(cfg, f.k, f.r_max * f.r, [&](std::span<const PointId>, std::span<const Position> chart) {
    const double xi = f(chart);
    if (xi != 0.0) s.add(xi);
  });
  return s.value();
}

double exclusive_value(const Configuration& cfg, const LocalFunctional& f, const NeighborhoodMap& nbhd) {
  CompensatedSum s;
  for_each_local_subset(cfg, f.k, f.r_max * f.r, [&](std::span<const PointId> ids, std::span<const Position> chart) {
    const double xi = f(chart);
    if (xi == 0.0) return;
    if (region_empty(nbhd.build(chart, f.r), cfg, ids)) s.add(xi);
  });
  return s.value();
}

TimeSeries sample_path(const SimulationConfig& cfg, const FunctionalSelection& sel, std::span<const double> sample_times,
                       std::uint64_t replication) {
  cfg.validate();
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < 0.0 || sample_times[i] > cfg.horizon) throw ContractViolation("sample_path: sample time outside [0, T]");
    if (i > 0 && !(sample_times[i] > sample_times[i - 1])) throw ContractViolation("sample_path: sample times must increase");
  }
  const double cell = tracker_cell_size(sel.functional, sel.neighborhood);
  CounterRng root(cfg.seed, replication);
  CounterRng init_rng = root.split(0);
  Configuration initial = sample_stationary(cfg, init_rng, cell);
  StatisticTracker tracker(initial, sel.functional, sel.neighborhood);
  BirthDeathEngine engine(cfg, std::move(initial), root.split(1));

  TimeSeries out;
  out.replication = replication;
  out.times.assign(sample_times.begin(), sample_times.end());
  out.values.reserve(sample_times.size());
  std::optional<Event> next = engine.propose();
  for (double t : sample_times) {
    while (next && next->time <= t) {
      tracker.apply_event(*next, engine.configuration());
      engine.commit(*next);
      next = engine.propose();
    }
    out.values.push_back(tracker.value());
  }
  return out;
}

std::string paths_csv(std::span<const TimeSeries> paths) {
  std::ostringstream os;
  os << "rep,t,value\n";
  char buf[96];
  for (const auto& p : paths)
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g\n", static_cast<unsigned long long>(p.replication), p.times[i], p.values[i]);
      os << buf;
    }
  return os.str();
}

}  // namespace bdgeom
