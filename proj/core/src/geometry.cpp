#include "bdgeom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bdgeom {

Position::Position(std::initializer_list<double> coords) {
  detail::require(coords.size() >= 1 && coords.size() <= static_cast<std::size_t>(kMaxDim),
                  "Position: dimension must be 1..3");
  dim_ = static_cast<int>(coords.size());
  std::copy(coords.begin(), coords.end(), c_.begin());
}

Position Position::from_span(std::span<const double> coords) {
  detail::require(coords.size() >= 1 && coords.size() <= static_cast<std::size_t>(kMaxDim),
                  "Position: dimension must be 1..3");
  Position p(static_cast<int>(coords.size()));
  std::copy(coords.begin(), coords.end(), p.c_.begin());
  return p;
}

Position& Position::operator+=(const Position& o) {
  detail::require(dim_ == o.dim_, "Position: dimension mismatch");
  for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
  return *this;
}

Position& Position::operator-=(const Position& o) {
  detail::require(dim_ == o.dim_, "Position: dimension mismatch");
  for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
  return *this;
}

Position& Position::operator*=(double s) {
  for (int i = 0; i < dim_; ++i) c_[i] *= s;
  return *this;
}

double Position::squared_norm() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += c_[i] * c_[i];
  return s;
}

double Position::norm() const { return std::sqrt(squared_norm()); }

double Position::dot(const Position& o) const {
  detail::require(dim_ == o.dim_, "Position: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += c_[i] * o.c_[i];
  return s;
}

// ---------------------------------------------------------------------------

Position Metric::displacement(const Position& from, const Position& to) const {
  if (from.dim() != dim || to.dim() != dim) throw ContractViolation("Metric: dimension mismatch");
  Position delta = to - from;
  if (kind == MetricKind::torus) {
    for (int i = 0; i < dim; ++i) delta[i] -= std::nearbyint(delta[i]);
  }
  return delta;
}

Position Metric::wrap(const Position& p) const {
  if (kind != MetricKind::torus) return p;
  Position q = p;
  for (int i = 0; i < dim; ++i) {
    q[i] -= std::floor(q[i]);
    if (q[i] >= 1.0) q[i] = 0.0;
  }
  return q;
}

bool Metric::valid(const Position& p) const {
  if (p.dim() != dim) return false;
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(p[i])) return false;
    if (kind == MetricKind::torus && (p[i] < 0.0 || p[i] >= 1.0)) return false;
  }
  return true;
}

double distance(const Position& a, const Position& b, const Metric& m) { return m.displacement(a, b).norm(); }

std::vector<Position> local_chart(std::span<const Position> points, const Metric& m) {
  std::vector<Position> out(points.begin(), points.end());
  if (m.kind == MetricKind::torus && !out.empty()) {
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = m.unwrap_near(out[0], out[i]);
  }
  return out;
}

double diameter(std::span<const Position> points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) best = std::max(best, (points[i] - points[j]).squared_norm());
  return std::sqrt(best);
}

// ---------------------------------------------------------------------------

std::size_t GridIndex::CellHash::operator()(const Cell& c) const noexcept {
  std::uint64_t h = 0x84222325CBF29CE4ULL;
  for (auto v : c) {
    h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

GridIndex::GridIndex(Metric metric, double cell_size) : metric_(metric), cell_size_(cell_size) {
  detail::require(metric.dim >= 1 && metric.dim <= kMaxDim, "GridIndex: dimension must be 1..3");
  detail::require(cell_size > 0.0 && std::isfinite(cell_size), "GridIndex: cell size must be positive");
  if (metric_.kind == MetricKind::torus) {
    // Cap the dense table at ~2^21 buckets; wider cells remain valid.
    const double cap = std::floor(std::pow(2097152.0, 1.0 / metric_.dim));
    cells_per_dim_ = static_cast<std::int64_t>(std::clamp(std::floor(1.0 / cell_size), 1.0, cap));
    cell_width_ = 1.0 / static_cast<double>(cells_per_dim_);
    std::size_t total = 1;
    for (int i = 0; i < metric_.dim; ++i) total *= static_cast<std::size_t>(cells_per_dim_);
    dense_.resize(total);
  } else {
    cell_width_ = cell_size;
  }
}

GridIndex::Cell GridIndex::cell_of(const Position& p) const {
  Cell c{};
  if (metric_.kind == MetricKind::torus) {
    const Position w = metric_.wrap(p);
    for (int i = 0; i < metric_.dim; ++i)
      c[i] = std::min<std::int64_t>(static_cast<std::int64_t>(w[i] / cell_width_), cells_per_dim_ - 1);
  } else {
    for (int i = 0; i < metric_.dim; ++i) c[i] = static_cast<std::int64_t>(std::floor(p[i] / cell_width_));
  }
  return c;
}

const std::vector<GridIndex::Entry>* GridIndex::bucket(const Cell& cell) const {
  if (metric_.kind == MetricKind::torus) {
    std::size_t idx = 0;
    for (int i = metric_.dim - 1; i >= 0; --i) idx = idx * static_cast<std::size_t>(cells_per_dim_) + static_cast<std::size_t>(cell[i]);
    return &dense_[idx];
  }
  auto it = sparse_.find(cell);
  return it == sparse_.end() ? nullptr : &it->second;
}

std::vector<GridIndex::Entry>& GridIndex::bucket_mut(const Cell& cell) {
  if (metric_.kind == MetricKind::torus) return const_cast<std::vector<Entry>&>(*bucket(cell));
  return sparse_[cell];
}

const Position& GridIndex::position(PointId id) const {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw ContractViolation("GridIndex: unknown point id");
  return bucket(it->second.cell)->at(it->second.offset).pos;
}

void GridIndex::insert(PointId id, const Position& p) {
  if (!metric_.valid(metric_.wrap(p))) throw ContractViolation("GridIndex: position invalid under metric");
  if (slots_.count(id)) throw ContractViolation("GridIndex: duplicate point id");
  const Position stored = metric_.wrap(p);
  const Cell cell = cell_of(stored);
  auto& b = bucket_mut(cell);
  slots_.emplace(id, Slot{cell, b.size()});
  b.push_back(Entry{id, stored});
}

void GridIndex::erase(PointId id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw ContractViolation("GridIndex: erase of unknown point id");
  const Slot slot = it->second;
  auto& b = bucket_mut(slot.cell);
  if (slot.offset + 1 != b.size()) {
    b[slot.offset] = b.back();
    slots_[b[slot.offset].id].offset = slot.offset;
  }
  b.pop_back();
  slots_.erase(it);
  if (metric_.kind == MetricKind::euclidean && b.empty()) sparse_.erase(slot.cell);
}

void GridIndex::clear() {
  for (auto& b : dense_) b.clear();
  sparse_.clear();
  slots_.clear();
}

std::vector<PointId> GridIndex::neighbors_within(const Position& x, double rho) const {
  std::vector<PointId> out;
  for_each_within(x, rho, [&](PointId id, const Position&) { out.push_back(id); });
  return out;
}

// ---------------------------------------------------------------------------

Circumball circumball(std::span<const Position> points) {
  const std::size_t m = points.size();
  if (m == 0) throw DegenerateGeometry("circumball: empty point set");
  const int d = points[0].dim();
  if (m > static_cast<std::size_t>(d) + 1) throw DegenerateGeometry("circumball: more than d+1 points");
  for (const auto& p : points)
    if (p.dim() != d) throw ContractViolation("circumball: dimension mismatch");

  Circumball out;
  out.ball.on_boundary_count = static_cast<int>(m);
  if (m == 1) {
    out.ball.center = points[0];
    out.ball.radius = 0.0;
    out.center_in_open_simplex = true;
    return out;
  }

  // center = p0 + sum_i mu_i (p_i - p0); equidistance gives G mu = b / 2 with
  // G the Gram matrix of the edge vectors.
  const std::size_t k = m - 1;
  std::vector<Position> e(k);
  for (std::size_t i = 0; i < k; ++i) e[i] = points[i + 1] - points[0];
  std::vector<double> a(k * (k + 1));
  double scale = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a[i * (k + 1) + j] = e[i].dot(e[j]);
    a[i * (k + 1) + k] = 0.5 * e[i].squared_norm();
    scale = std::max(scale, a[i * (k + 1) + i]);
  }
  if (scale <= 0.0) throw DegenerateGeometry("circumball: coincident points");

  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r * (k + 1) + col]) > std::abs(a[piv * (k + 1) + col])) piv = r;
    if (std::abs(a[piv * (k + 1) + col]) <= 1e-12 * scale) throw DegenerateGeometry("circumball: affinely dependent points");
    if (piv != col)
      for (std::size_t c = 0; c <= k; ++c) std::swap(a[piv * (k + 1) + c], a[col * (k + 1) + c]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r * (k + 1) + col] / a[col * (k + 1) + col];
      for (std::size_t c = col; c <= k; ++c) a[r * (k + 1) + c] -= f * a[col * (k + 1) + c];
    }
  }
  std::vector<double> mu(k);
  double mu_sum = 0.0;
  Position center = points[0];
  for (std::size_t i = 0; i < k; ++i) {
    mu[i] = a[i * (k + 1) + k] / a[i * (k + 1) + i];
    mu_sum += mu[i];
    center += mu[i] * e[i];
  }
  out.ball.center = center;
  out.ball.radius = (center - points[0]).norm();

  bool inside = 1.0 - mu_sum > kGeomTol;
  for (double v : mu) inside = inside && v > kGeomTol;
  out.center_in_open_simplex = inside;
  return out;
}

}  // namespace bdgeom
