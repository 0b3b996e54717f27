#include "bdgeom/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace bdgeom {

Density::Density(Spec spec, int dim) : spec_(std::move(spec)), dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("density: dimension must be 1..3");
  if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
    if (!(g->sigma > 0.0)) throw ConfigError("density: gaussian sigma must be positive");
  }
  if (const auto* t = std::get_if<TableDensity>(&spec_)) {
    if (t->cells_per_dim < 1) throw ConfigError("density: table needs at least one cell per dimension");
    std::size_t cells = 1;
    for (int i = 0; i < dim; ++i) cells *= static_cast<std::size_t>(t->cells_per_dim);
    if (t->values.size() != cells) throw ConfigError("density: table has wrong number of cells");
    const double cell_volume = std::pow(1.0 / t->cells_per_dim, dim);
    double mass = 0.0;
    cumulative_.reserve(cells);
    for (double v : t->values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("density: table values must be finite and non-negative");
      mass += v * cell_volume;
      cumulative_.push_back(mass);
    }
    if (std::abs(mass - 1.0) > 1e-6) throw ConfigError("density: table does not integrate to 1 (got " + std::to_string(mass) + ")");
  }
}

Metric Density::metric() const {
  return std::holds_alternative<GaussianDensity>(spec_) ? Metric::euclidean(dim_) : Metric::torus(dim_);
}

std::string Density::describe() const {
  if (is_uniform_torus()) return "uniform-torus";
  if (const auto* g = std::get_if<GaussianDensity>(&spec_)) return "gaussian(" + std::to_string(g->sigma) + ")";
  return "table";
}

Position Density::sample(CounterRng& rng) const {
  Position p(dim_);
  if (is_uniform_torus()) {
    for (int i = 0; i < dim_; ++i) p[i] = rng.uniform();
  } else if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
    for (int i = 0; i < dim_; ++i) p[i] = g->sigma * rng.normal();
  } else {
    const auto& t = std::get<TableDensity>(spec_);
    const double u = rng.uniform() * cumulative_.back();
    std::size_t cell = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    cell = std::min(cell, cumulative_.size() - 1);
    const double w = 1.0 / t.cells_per_dim;
    for (int i = 0; i < dim_; ++i) {
      const auto ci = cell % static_cast<std::size_t>(t.cells_per_dim);
      cell /= static_cast<std::size_t>(t.cells_per_dim);
      p[i] = std::min((static_cast<double>(ci) + rng.uniform()) * w, std::nextafter(1.0, 0.0));
    }
  }
  return p;
}

double Density::pdf(const Position& x) const {
  if (is_uniform_torus()) return 1.0;
  if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
    const double s2 = g->sigma * g->sigma;
    return std::exp(-0.5 * x.squared_norm() / s2) / std::pow(2.0 * std::numbers::pi * s2, 0.5 * dim_);
  }
  const auto& t = std::get<TableDensity>(spec_);
  const Position w = metric().wrap(x);
  std::size_t idx = 0;
  for (int i = dim_ - 1; i >= 0; --i) {
    const auto ci = std::min<std::size_t>(static_cast<std::size_t>(w[i] * t.cells_per_dim), static_cast<std::size_t>(t.cells_per_dim - 1));
    idx = idx * static_cast<std::size_t>(t.cells_per_dim) + ci;
  }
  return t.values[idx];
}

double Density::integral_power(double m) const {
  if (is_uniform_torus()) return 1.0;
  if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
    const double s2 = g->sigma * g->sigma;
    return std::pow(2.0 * std::numbers::pi * s2, -0.5 * dim_ * (m - 1.0)) * std::pow(m, -0.5 * dim_);
  }
  const auto& t = std::get<TableDensity>(spec_);
  const double cell_volume = std::pow(1.0 / t.cells_per_dim, dim_);
  double s = 0.0;
  for (double v : t.values) s += std::pow(v, m) * cell_volume;
  return s;
}

double Density::sup() const {
  if (is_uniform_torus()) return 1.0;
  if (const auto* g = std::get_if<GaussianDensity>(&spec_))
    return std::pow(2.0 * std::numbers::pi * g->sigma * g->sigma, -0.5 * dim_);
  const auto& t = std::get<TableDensity>(spec_);
  return *std::max_element(t.values.begin(), t.values.end());
}

// ---------------------------------------------------------------------------

void SimulationConfig::validate() const {
  if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("config: n must be positive");
  if (dim < 1 || dim > kMaxDim) throw ConfigError("config: dimension must be 1..3");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("config: horizon must be non-negative");
  if (gamma && !(*gamma > 0.0)) throw ConfigError("config: gamma must be positive");
  if (radius && !(*radius > 0.0)) throw ConfigError("config: radius must be positive");
  (void)make_density();
}

double SimulationConfig::interaction_radius() const {
  if (gamma) return std::pow(*gamma / n, 1.0 / dim);
  if (radius) return *radius;
  throw ConfigError("config: neither gamma nor radius is set");
}

// ---------------------------------------------------------------------------

Configuration::Configuration(Metric metric, double cell_size) : index_(metric, cell_size) {}

void Configuration::insert(const MarkedPoint& p) {
  if (slot_.count(p.id)) throw ContractViolation("Configuration: duplicate id");
  index_.insert(p.id, p.position);
  MarkedPoint stored = p;
  stored.position = index_.position(p.id);
  slot_.emplace(p.id, alive_.size());
  alive_.push_back(std::move(stored));
}

MarkedPoint Configuration::erase(PointId id) {
  auto it = slot_.find(id);
  if (it == slot_.end()) throw ContractViolation("Configuration: erase of unknown id");
  const std::size_t pos = it->second;
  MarkedPoint out = alive_[pos];
  if (pos + 1 != alive_.size()) {
    alive_[pos] = std::move(alive_.back());
    slot_[alive_[pos].id] = pos;
  }
  alive_.pop_back();
  slot_.erase(it);
  index_.erase(id);
  return out;
}

const MarkedPoint& Configuration::point(PointId id) const {
  auto it = slot_.find(id);
  if (it == slot_.end()) throw ContractViolation("Configuration: unknown id");
  return alive_[it->second];
}

std::vector<PointId> Configuration::ids() const {
  std::vector<PointId> out;
  out.reserve(alive_.size());
  for (const auto& p : alive_) out.push_back(p.id);
  return out;
}

Configuration Configuration::reindexed(double cell_size) const {
  Configuration out(metric(), cell_size);
  for (const auto& p : alive_) out.insert(p);
  return out;
}

// ---------------------------------------------------------------------------

Configuration sample_stationary(const SimulationConfig& cfg, CounterRng& rng, double cell_size) {
  cfg.validate();
  const Density q = cfg.make_density();
  Configuration out(q.metric(), cell_size);
  const auto count = rng.poisson(cfg.n);
  for (std::uint64_t i = 0; i < count; ++i) {
    MarkedPoint p;
    p.id = i;
    p.position = q.sample(rng);
    p.birth = 0.0;
    p.lifetime = rng.exponential(1.0);
    out.insert(p);
  }
  return out;
}

BirthDeathEngine::BirthDeathEngine(const SimulationConfig& cfg, Configuration initial, CounterRng rng)
    : n_(cfg.n), horizon_(cfg.horizon), density_(cfg.make_density()), config_(std::move(initial)), rng_(rng) {
  cfg.validate();
  for (const auto& p : config_.points()) next_id_ = std::max(next_id_, p.id + 1);
}

std::optional<Event> BirthDeathEngine::propose() {
  if (pending_) throw ContractViolation("BirthDeathEngine: previous event not committed");
  const double m = static_cast<double>(config_.size());
  const double total = n_ + m;
  const double t = time_ + rng_.exponential(total);
  if (t > horizon_) {
    time_ = horizon_;
    return std::nullopt;
  }
  Event e;
  e.time = t;
  if (rng_.uniform() * total < n_) {
    e.kind = EventKind::birth;
    e.point.id = next_id_;
    e.point.position = density_.sample(rng_);
    e.point.birth = t;
    e.point.lifetime = 0.0;  // unknown until death
  } else {
    e.kind = EventKind::death;
    e.point = config_.point(config_.id_at(rng_.below(config_.size())));
  }
  pending_ = true;
  return e;
}

void BirthDeathEngine::commit(const Event& e) {
  if (!pending_) throw ContractViolation("BirthDeathEngine: commit without propose");
  pending_ = false;
  time_ = e.time;
  if (e.kind == EventKind::birth) {
    config_.insert(e.point);
    next_id_ = std::max(next_id_, e.point.id + 1);
  } else {
    config_.erase(e.point.id);
  }
}

EventStream simulate_events(const SimulationConfig& cfg, const Configuration& initial, CounterRng& rng) {
  BirthDeathEngine engine(cfg, initial, rng.split(0));
  EventStream events;
  std::unordered_map<PointId, double> death_time;
  while (auto e = engine.propose()) {
    engine.commit(*e);
    if (e->kind == EventKind::death) death_time[e->point.id] = e->time;
    events.push_back(std::move(*e));
  }
  // Residual lifetimes beyond the horizon are Exp(1) by memorylessness.
  CounterRng residual = rng.split(1);
  std::unordered_map<PointId, double> lifetime;
  auto lifetime_of = [&](const MarkedPoint& p) {
    auto it = lifetime.find(p.id);
    if (it != lifetime.end()) return it->second;
    auto d = death_time.find(p.id);
    const double life = d != death_time.end() ? d->second - p.birth : (cfg.horizon - p.birth) + residual.exponential(1.0);
    lifetime.emplace(p.id, life);
    return life;
  };
  for (auto& e : events) e.point.lifetime = lifetime_of(e.point);
  return events;
}

MarkedProcess sample_marked(const SimulationConfig& cfg, CounterRng& rng) {
  cfg.validate();
  const Density q = cfg.make_density();
  const double T = cfg.horizon;
  MarkedProcess out;
  out.horizon = T;
  out.metric = q.metric();
  const auto count = rng.poisson(cfg.n * (1.0 + T));
  out.points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    MarkedPoint p;
    p.id = i;
    p.position = q.sample(rng);
    const bool initial = rng.uniform() * (1.0 + T) < 1.0;
    p.birth = initial ? 0.0 : rng.uniform() * T;
    p.lifetime = rng.exponential(1.0);
    out.points.push_back(p);
  }
  return out;
}

Configuration slice(const MarkedProcess& marked, double t, double cell_size) {
  if (t < 0.0 || t > marked.horizon) throw ContractViolation("slice: time outside [0, T]");
  Configuration out(marked.metric, cell_size);
  for (const auto& p : marked.points)
    if (p.birth <= t && t < p.birth + p.lifetime) out.insert(p);
  return out;
}

std::string event_log_csv(const EventStream& events, int dim) {
  std::ostringstream os;
  os << "time,kind,id";
  for (int i = 1; i <= dim; ++i) os << ",x" << i;
  os << ",lifetime\n";
  char buf[64];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.time);
    os << buf << ',' << (e.kind == EventKind::birth ? "birth" : "death") << ',' << e.point.id;
    for (int i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", e.point.position[i]);
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", e.point.lifetime);
    os << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace bdgeom
