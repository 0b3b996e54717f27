#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "bdgeom/errors.hpp"

namespace bdgeom {

inline constexpr int kMaxDim = 3;

/// Absolute tolerance, in domain units, for equidistance and barycentric
/// positivity checks.
inline constexpr double kGeomTol = 1e-9;

using PointId = std::uint64_t;

/// A point of R^d, d in {1, 2, 3}.
class Position {
 public:
  Position() = default;
  explicit Position(int dim) : dim_(dim) { detail::require(dim >= 1 && dim <= kMaxDim, "Position: dimension must be 1..3"); }
  Position(std::initializer_list<double> coords);
  static Position from_span(std::span<const double> coords);

  int dim() const { return dim_; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  Position& operator+=(const Position& o);
  Position& operator-=(const Position& o);
  Position& operator*=(double s);
  friend Position operator+(Position a, const Position& b) { return a += b; }
  friend Position operator-(Position a, const Position& b) { return a -= b; }
  friend Position operator*(double s, Position a) { return a *= s; }
  friend bool operator==(const Position& a, const Position& b) { return a.dim_ == b.dim_ && a.c_ == b.c_; }

  double norm() const;
  double squared_norm() const;
  double dot(const Position& o) const;

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

enum class MetricKind { euclidean, torus };

/// Euclidean R^d or the unit torus [0,1)^d.
struct Metric {
  MetricKind kind = MetricKind::euclidean;
  int dim = 2;

  static Metric euclidean(int d) { return {MetricKind::euclidean, d}; }
  static Metric torus(int d) { return {MetricKind::torus, d}; }

  /// Shortest displacement from `from` to `to` (minimum image on the torus).
  Position displacement(const Position& from, const Position& to) const;
  /// Representative of `to` closest to `anchor`, in anchor's chart.
  Position unwrap_near(const Position& anchor, const Position& to) const { return anchor + displacement(anchor, to); }
  /// Canonical coordinates: torus coordinates folded into [0, 1).
  Position wrap(const Position& p) const;
  bool valid(const Position& p) const;
};

double distance(const Position& a, const Position& b, const Metric& m);

/// Copies `points` into one Euclidean chart anchored at the first point; for
/// sets of diameter < 1/2 on the torus all pairwise distances are preserved.
std::vector<Position> local_chart(std::span<const Position> points, const Metric& m);

double diameter(std::span<const Position> points);

/// Uniform grid over point ids. Cells have side >= cell_size, so a query of
/// radius <= cell_size inspects at most 3^d cells. Single writer.
class GridIndex {
 public:
  GridIndex(Metric metric, double cell_size);

  const Metric& metric() const { return metric_; }
  double cell_size() const { return cell_size_; }
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  bool contains(PointId id) const { return slots_.count(id) != 0; }
  const Position& position(PointId id) const;

  void insert(PointId id, const Position& p);
  void erase(PointId id);
  void clear();

  /// Ids y with distance(x, y) <= rho (closed ball).
  std::vector<PointId> neighbors_within(const Position& x, double rho) const;

  /// Calls fn(id, position) for every indexed point within rho of x.
  template <class Fn>
  void for_each_within(const Position& x, double rho, Fn&& fn) const;

 private:
  using Cell = std::array<std::int64_t, kMaxDim>;
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept;
  };
  struct Slot {
    Cell cell;
    std::size_t offset;
  };
  struct Entry {
    PointId id;
    Position pos;
  };

  Cell cell_of(const Position& p) const;
  const std::vector<Entry>* bucket(const Cell& cell) const;
  std::vector<Entry>& bucket_mut(const Cell& cell);
  template <class Fn>
  void visit_cells(const Position& x, Fn&& fn) const;

  Metric metric_;
  double cell_size_;
  // Torus: dense array of cells_per_dim^d buckets. Euclidean: hashed buckets.
  std::int64_t cells_per_dim_ = 0;
  double cell_width_ = 0.0;
  std::vector<std::vector<Entry>> dense_;
  std::unordered_map<Cell, std::vector<Entry>, CellHash> sparse_;
  std::unordered_map<PointId, Slot> slots_;
};

struct Ball {
  Position center;
  double radius = 0.0;
  int on_boundary_count = 0;
};

struct Circumball {
  Ball ball;
  /// True iff the center's barycentric coordinates are all > kGeomTol.
  bool center_in_open_simplex = false;
};

/// Circumscribed ball of k+1 <= d+1 affinely independent points (Euclidean
/// coordinates). Throws DegenerateGeometry otherwise.
Circumball circumball(std::span<const Position> points);

// ---------------------------------------------------------------------------

template <class Fn>
void GridIndex::visit_cells(const Position& x, Fn&& fn) const {
  const auto center = cell_of(x);
  const int d = metric_.dim;
  std::array<std::int64_t, kMaxDim> lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    if (metric_.kind == MetricKind::torus && cells_per_dim_ <= 3) {
      lo[i] = 0;
      hi[i] = cells_per_dim_ - 1;
    } else {
      lo[i] = center[i] - 1;
      hi[i] = center[i] + 1;
    }
  }
  std::array<std::int64_t, kMaxDim> cell{};
  std::array<std::int64_t, kMaxDim> probe{};
  for (cell[0] = lo[0]; cell[0] <= hi[0]; ++cell[0]) {
    for (cell[1] = lo[1]; cell[1] <= hi[1]; ++cell[1]) {
      for (cell[2] = lo[2]; cell[2] <= hi[2]; ++cell[2]) {
        probe = cell;
        if (metric_.kind == MetricKind::torus) {
          for (int i = 0; i < d; ++i) probe[i] = ((probe[i] % cells_per_dim_) + cells_per_dim_) % cells_per_dim_;
        }
        if (const auto* b = bucket(probe)) fn(*b);
      }
    }
  }
}

template <class Fn>
void GridIndex::for_each_within(const Position& x, double rho, Fn&& fn) const {
  if (rho > cell_size_ * (1.0 + 1e-12)) throw ContractViolation("GridIndex: query radius exceeds cell size");
  if (x.dim() != metric_.dim) throw ContractViolation("GridIndex: dimension mismatch");
  const double rho2 = rho * rho;
  visit_cells(x, [&](const std::vector<Entry>& b) {
    for (const auto& e : b) {
      if (metric_.displacement(x, e.pos).squared_norm() <= rho2) fn(e.id, e.pos);
    }
  });
}

}  // namespace bdgeom
