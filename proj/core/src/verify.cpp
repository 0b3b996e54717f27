#include "bdgeom/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "bdgeom/errors.hpp"
#include "bdgeom/functionals.hpp"

namespace bdgeom {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0, prev = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-12 * std::abs(sum) || std::abs(term) <= 1e-3 * prev) break;
    prev = std::abs(term);
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Index pairs (a, b) with t_b - t_a == lag, up to rounding.
std::vector<std::pair<std::size_t, std::size_t>> lag_pairs(std::span<const double> times, double lag, bool pool) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const double tol = 1e-9 * std::max(1.0, std::abs(lag));
  const std::size_t origins = pool ? times.size() : std::min<std::size_t>(1, times.size());
  for (std::size_t a = 0; a < origins; ++a) {
    const double target = times[a] + lag;
    auto it = std::lower_bound(times.begin(), times.end(), target - tol);
    if (it != times.end() && std::abs(*it - target) <= tol) out.emplace_back(a, static_cast<std::size_t>(it - times.begin()));
  }
  return out;
}

}  // namespace

CovarianceEstimate estimate_covariance(std::span<const TimeSeries> paths, std::span<const double> lags, bool pool_origins) {
  if (paths.size() < 30) throw ContractViolation("estimate_covariance: need at least 30 replications");
  const auto& times = paths.front().times;
  for (const auto& p : paths)
    if (p.times != times || p.values.size() != times.size())
      throw ContractViolation("estimate_covariance: replications do not share one time grid");
  const std::size_t reps = paths.size();
  const auto dreps = static_cast<double>(reps);

  std::vector<double> mean(times.size(), 0.0);
  for (const auto& p : paths)
    for (std::size_t i = 0; i < times.size(); ++i) mean[i] += p.values[i];
  for (auto& m : mean) m /= dreps;

  auto per_replication = [&](double lag) {
    const auto pairs = lag_pairs(times, lag, pool_origins);
    if (pairs.empty()) throw ContractViolation("estimate_covariance: lag " + std::to_string(lag) + " is not on the sample grid");
    std::vector<double> c(reps, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      CompensatedSum s;
      const auto& v = paths[r].values;
      for (const auto& [a, b] : pairs) s.add((v[a] - mean[a]) * (v[b] - mean[b]));
      c[r] = s.value() / static_cast<double>(pairs.size());
    }
    return c;
  };

  const std::vector<double> base = per_replication(0.0);
  double base_mean = 0.0;
  for (double b : base) base_mean += b;
  base_mean /= dreps;
  if (!(base_mean > 0.0)) throw ContractViolation("estimate_covariance: zero variance at lag 0");

  CovarianceEstimate out;
  out.replications = reps;
  for (double lag : lags) {
    const std::vector<double> c = per_replication(lag);
    double c_mean = 0.0;
    for (double x : c) c_mean += x;
    c_mean /= dreps;
    const double ratio = c_mean / base_mean;
    double resid = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double e = c[r] - ratio * base[r];
      resid += e * e;
    }
    const double se = std::sqrt(resid / (dreps * (dreps - 1.0))) / base_mean;
    out.lags.push_back(lag);
    out.values.push_back(lag == 0.0 ? 1.0 : ratio);
    out.ci_half_widths.push_back(1.959963984540054 * se);
  }
  return out;
}

double ks_distance(std::span<const double> sample) {
  detail::require(!sample.empty(), "ks_distance: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const auto n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double phi = normal_cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - phi, phi - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<double> standardize(std::span<const double> sample) {
  std::vector<double> out(sample.begin(), sample.end());
  if (out.size() < 2) return std::vector<double>(out.size(), 0.0);
  double mean = 0.0;
  for (double x : out) mean += x;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double x : out) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size() - 1));
  for (double& x : out) x = sd > 0.0 ? (x - mean) / sd : 0.0;
  return out;
}

TestOutcome ks_two_sample(std::span<const double> a, std::span<const double> b) {
  detail::require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = std::sqrt(nx * ny / (nx + ny));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d), 0};
}

TestOutcome poisson_chi_square(std::span<const std::uint64_t> counts, double mean) {
  detail::require(!counts.empty() && mean > 0.0, "poisson_chi_square: need counts and a positive mean");
  const boost::math::poisson_distribution<double> pois(mean);
  const auto total = static_cast<double>(counts.size());
  std::uint64_t top = 0;
  for (auto c : counts) top = std::max(top, c);

  // Bin edges [lo, hi]; the last bin is open to the right.
  std::vector<std::pair<std::uint64_t, double>> bins;  // (upper value, expected)
  double acc = 0.0;
  const auto last = std::max<std::uint64_t>(top, static_cast<std::uint64_t>(mean + 10.0 * std::sqrt(mean) + 10.0));
  for (std::uint64_t v = 0; v <= last; ++v) {
    acc += total * boost::math::pdf(pois, static_cast<double>(v));
    if (acc >= 5.0) {
      bins.emplace_back(v, acc);
      acc = 0.0;
    }
  }
  // Fold the remaining right tail into an open last bin.
  const double tail = total * boost::math::cdf(boost::math::complement(pois, static_cast<double>(bins.empty() ? 0 : bins.back().first)));
  if (bins.empty()) throw ContractViolation("poisson_chi_square: too few observations to form bins");
  if (tail >= 5.0)
    bins.emplace_back(std::numeric_limits<std::uint64_t>::max(), tail);
  else {
    bins.back().first = std::numeric_limits<std::uint64_t>::max();
    bins.back().second += tail;
  }
  if (bins.size() < 2) throw ContractViolation("poisson_chi_square: fewer than two bins");

  std::vector<double> observed(bins.size(), 0.0);
  for (auto c : counts) {
    const auto it = std::lower_bound(bins.begin(), bins.end(), c, [](const auto& bin, std::uint64_t v) { return bin.first < v; });
    observed[static_cast<std::size_t>(it - bins.begin())] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) stat += (observed[i] - bins[i].second) * (observed[i] - bins[i].second) / bins[i].second;
  const int dof = static_cast<int>(bins.size()) - 1;
  return {stat, boost::math::gamma_q(dof / 2.0, stat / 2.0), dof};
}

// ---------------------------------------------------------------------------

IntersectionPattern::IntersectionPattern(int subsets) : l_(subsets) {
  if (subsets < 1 || subsets > 4) throw ConfigError("intersection pattern: 1..4 subsets supported");
  counts_.assign(std::size_t{1} << subsets, 0);
}

void IntersectionPattern::set(unsigned mask, int count) {
  if (mask == 0 || mask >= counts_.size()) throw ConfigError("intersection pattern: mask out of range");
  if (count < 0) throw ConfigError("intersection pattern: negative count");
  counts_[mask] = count;
}

int IntersectionPattern::subset_size(int i) const {
  int s = 0;
  for (unsigned m = 1; m < counts_.size(); ++m)
    if (m >> i & 1U) s += counts_[m];
  return s;
}

int IntersectionPattern::total() const {
  int s = 0;
  for (int c : counts_) s += c;
  return s;
}

std::string IntersectionPattern::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (unsigned m = 1; m < counts_.size(); ++m) {
    if (counts_[m] == 0) continue;
    if (!first) os << ',';
    first = false;
    os << '{';
    bool inner = false;
    for (int i = 0; i < l_; ++i)
      if (m >> i & 1U) {
        if (inner) os << ' ';
        os << i + 1;
        inner = true;
      }
    os << "}:" << counts_[m];
  }
  return os.str();
}

namespace {

// Slot s of the flattened pattern belongs to group mask slots[s]; slots of
// one group are contiguous.
std::vector<unsigned> flatten(const IntersectionPattern& p) {
  std::vector<unsigned> slots;
  for (unsigned m = 1; m < (1U << p.subsets()); ++m)
    for (int c = 0; c < p.count(m); ++c) slots.push_back(m);
  return slots;
}

void fill_subsets(const IntersectionPattern& p, std::span<const unsigned> slots, std::span<const Position> assigned,
                  std::vector<std::vector<Position>>& subsets) {
  subsets.assign(static_cast<std::size_t>(p.subsets()), {});
  for (std::size_t s = 0; s < slots.size(); ++s)
    for (int i = 0; i < p.subsets(); ++i)
      if (slots[s] >> i & 1U) subsets[i].push_back(assigned[s]);
}

struct Mean {
  CompensatedSum sum, sum_sq;
  std::size_t n = 0;
  void add(double x) {
    sum.add(x);
    sum_sq.add(x * x);
    ++n;
  }
  double mean() const { return sum.value() / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    const double var = std::max(0.0, sum_sq.value() / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n - 1));
  }
};

}  // namespace

MeckeResult mecke_oracle(const MeckeTest& h, const IntersectionPattern& pattern, double n, const Density& q, std::size_t samples,
                         std::uint64_t seed) {
  if (pattern.total() < 1 || pattern.total() > 6) throw ContractViolation("mecke_oracle: |I| must be 1..6");
  if (!(n > 0.0) || n > 20.0) throw ContractViolation("mecke_oracle: n must be in (0, 20]");
  if (samples < 2) throw ContractViolation("mecke_oracle: need at least two samples");
  const std::vector<unsigned> slots = flatten(pattern);
  const std::size_t size = slots.size();

  double group_factorials = 1.0;
  for (unsigned m = 1; m < (1U << pattern.subsets()); ++m) group_factorials *= std::tgamma(pattern.count(m) + 1.0);

  std::vector<std::vector<Position>> subsets;
  std::vector<Position> process, assigned(size);
  std::vector<std::size_t> chosen(size);
  std::vector<char> used;

  // Left side: sum over pattern-obeying tuples of distinct process points,
  // increasing indices within each group.
  Mean lhs;
  CounterRng lrng(seed, 0);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::uint64_t count = lrng.poisson(n);
    process.clear();
    for (std::uint64_t i = 0; i < count; ++i) process.push_back(q.sample(lrng));
    used.assign(process.size(), 0);
    CompensatedSum total;
    auto recurse = [&](auto&& self, std::size_t slot) -> void {
      if (slot == size) {
        fill_subsets(pattern, slots, assigned, subsets);
        total.add(h(subsets, process));
        return;
      }
      const bool same_group = slot > 0 && slots[slot] == slots[slot - 1];
      const std::size_t start = same_group ? chosen[slot - 1] + 1 : 0;
      for (std::size_t i = start; i < process.size(); ++i) {
        if (used[i]) continue;
        used[i] = 1;
        chosen[slot] = i;
        assigned[slot] = process[i];
        self(self, slot + 1);
        used[i] = 0;
      }
    };
    recurse(recurse, 0);
    lhs.add(total.value());
  }

  // Right side: |I| i.i.d. points placed by the pattern, plus an
  // independent process.
  Mean rhs;
  CounterRng rrng(seed, 1);
  const double scale = std::pow(n, static_cast<double>(size)) / group_factorials;
  for (std::size_t s = 0; s < samples; ++s) {
    process.clear();
    for (std::size_t i = 0; i < size; ++i) {
      assigned[i] = q.sample(rrng);
      process.push_back(assigned[i]);
    }
    const std::uint64_t count = rrng.poisson(n);
    for (std::uint64_t i = 0; i < count; ++i) process.push_back(q.sample(rrng));
    fill_subsets(pattern, slots, assigned, subsets);
    rhs.add(scale * h(subsets, process));
  }

  MeckeResult out{lhs.mean(), lhs.se(), rhs.mean(), rhs.se(), false};
  const double se = std::hypot(out.lhs_se, out.rhs_se);
  out.agree = std::abs(out.lhs - out.rhs) <= 3.0 * se || out.lhs == out.rhs;
  return out;
}

std::vector<MeckeCase> mecke_battery() {
  const Metric torus = Metric::torus(2);
  constexpr double r = 0.3;
  auto close = [torus](const Position& a, const Position& b, double rho) { return distance(a, b, torus) <= rho; };
  auto edge = [close](const std::vector<Position>& s) { return close(s[0], s[1], r) ? 1.0 : 0.0; };
  auto clique = [close](const std::vector<Position>& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j)
        if (!close(s[i], s[j], r)) return 0.0;
    return 1.0;
  };
  auto member = [](const std::vector<Position>& s, const Position& x) { return std::find(s.begin(), s.end(), x) != s.end(); };
  // No process point outside S within r of any point of S.
  auto vacant = [close, member](const std::vector<Position>& s, std::span<const Position> process) {
    for (const auto& x : process) {
      if (member(s, x)) continue;
      for (const auto& c : s)
        if (close(c, x, r)) return 0.0;
    }
    return 1.0;
  };
  auto pattern = [](int l, std::initializer_list<std::pair<unsigned, int>> groups) {
    IntersectionPattern p(l);
    for (auto [m, c] : groups) p.set(m, c);
    return p;
  };

  std::vector<MeckeCase> cases;
  cases.push_back({"count", [](auto, auto) { return 1.0; }, pattern(1, {{1, 1}}), 8.0});
  cases.push_back({"pairs", [](auto, auto) { return 1.0; }, pattern(1, {{1, 2}}), 8.0});
  cases.push_back({"edge", [edge](auto s, auto) { return edge(s[0]); }, pattern(1, {{1, 2}}), 8.0});
  cases.push_back({"triangle", [clique](auto s, auto) { return clique(s[0]); }, pattern(1, {{1, 3}}), 8.0});
  cases.push_back({"edges sharing a point", [edge](auto s, auto) { return edge(s[0]) * edge(s[1]); }, pattern(2, {{1, 1}, {2, 1}, {3, 1}}), 8.0});
  cases.push_back({"disjoint edges", [edge](auto s, auto) { return edge(s[0]) * edge(s[1]); }, pattern(2, {{1, 2}, {2, 2}}), 6.0});
  cases.push_back({"identical edges", [edge](auto s, auto) { return edge(s[0]) * edge(s[1]); }, pattern(2, {{3, 2}}), 8.0});
  cases.push_back({"isolated point", [vacant](auto s, auto p) { return vacant(s[0], p); }, pattern(1, {{1, 1}}), 8.0});
  cases.push_back({"isolated edge", [edge, vacant](auto s, auto p) { return edge(s[0]) * vacant(s[0], p); }, pattern(1, {{1, 2}}), 8.0});
  cases.push_back({"capped degree",
                   [close, member](auto s, auto p) {
                     double d = 0.0;
                     for (const auto& x : p)
                       if (!member(s[0], x) && close(s[0][0], x, r)) d += 1.0;
                     return std::min(d, 3.0);
                   },
                   pattern(1, {{1, 1}}), 8.0});
  cases.push_back({"three-star", [edge](auto s, auto) { return edge(s[0]) * edge(s[1]) * edge(s[2]); },
                   pattern(3, {{7, 1}, {1, 1}, {2, 1}, {4, 1}}), 6.0});
  cases.push_back({"edge near a point",
                   [edge, close](auto s, auto) { return edge(s[0]) * (close(s[0][0], s[1][0], 2.0 * r) ? 1.0 : 0.0); },
                   pattern(2, {{1, 2}, {2, 1}}), 6.0});
  return cases;
}

// ---------------------------------------------------------------------------

EulerResult morse_euler_check(std::span<const Position> points) {
  EulerResult out;
  if (points.empty()) return out;
  const int d = points.front().dim();
  out.critical.assign(static_cast<std::size_t>(d) + 1, 0);
  out.critical[0] = points.size();
  std::vector<std::size_t> idx;
  std::vector<Position> subset;
  auto visit = [&](auto&& self, std::size_t start, int size) -> void {
    if (static_cast<int>(idx.size()) == size) {
      subset.clear();
      for (auto i : idx) subset.push_back(points[i]);
      Circumball cb;
      try {
        cb = circumball(subset);
      } catch (const DegenerateGeometry&) {
        ++out.degenerate;
        return;
      }
      if (!cb.center_in_open_simplex) return;
      const Region ball = Region::open_ball(cb.ball.center, cb.ball.radius);
      for (std::size_t j = 0; j < points.size(); ++j) {
        if (std::find(idx.begin(), idx.end(), j) != idx.end()) continue;
        if (ball.contains(points[j])) return;
      }
      ++out.critical[static_cast<std::size_t>(size - 1)];
      return;
    }
    for (std::size_t i = start; i < points.size(); ++i) {
      idx.push_back(i);
      self(self, i + 1, size);
      idx.pop_back();
    }
  };
  for (int size = 2; size <= d + 1; ++size) visit(visit, 0, size);
  for (std::size_t k = 0; k < out.critical.size(); ++k)
    out.value += (k % 2 == 0 ? 1 : -1) * static_cast<long long>(out.critical[k]);
  return out;
}

EulerResult morse_euler_check(const Configuration& cfg) {
  if (cfg.metric().kind != MetricKind::euclidean) throw ContractViolation("morse_euler_check: needs Euclidean coordinates");
  std::vector<Position> pts;
  for (const auto& p : cfg.points()) pts.push_back(p.position);
  return morse_euler_check(pts);
}

std::string report_json(std::span<const CheckResult> results) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["test"] = r.test;
    j["statistic"] = r.statistic;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    j["seed"] = r.seed;
    j["budget"] = r.budget;
    j["detail"] = r.detail;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace bdgeom
