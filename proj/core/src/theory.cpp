#include "bdgeom/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "bdgeom/errors.hpp"

namespace bdgeom {

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

double binomial(int n, int i) { return factorial(n) / (factorial(i) * factorial(n - i)); }

Position uniform_in_ball(CounterRng& rng, const Position& center, double radius) {
  const int d = center.dim();
  Position p(d);
  for (;;) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      p[i] = rng.uniform(-1.0, 1.0);
      s += p[i] * p[i];
    }
    if (s <= 1.0) break;
  }
  return center + radius * p;
}

// Running mean and variance of i.i.d. Monte Carlo terms.
struct Moments {
  CompensatedSum sum;
  CompensatedSum sum_sq;
  std::size_t n = 0;
  std::size_t hits = 0;

  void add(double x) {
    sum.add(x);
    sum_sq.add(x * x);
    ++n;
    if (x != 0.0) ++hits;
  }
  IntegralEstimate estimate(double scale = 1.0) const {
    IntegralEstimate e;
    e.method = EstimateMethod::monte_carlo;
    e.samples = n;
    e.zero_hit = hits == 0;
    if (n == 0) return e;
    const double mean = sum.value() / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq.value() / static_cast<double>(n) - mean * mean);
    e.value = scale * mean;
    e.std_error = n > 1 ? scale * std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    return e;
  }
};

// Draws S = p_0..p_{k-1} and, for pair layouts, S' = p_{k-j}..p_{2k-j-1}
// in one chart with p_0 at the origin. Each free point is uniform on a ball
// that covers its locality support, so `weight` (the product of those ball
// volumes) turns indicator averages into integrals.
class ChainSampler {
 public:
  ChainSampler(int dim, int k, int shared, bool pair, double step, double anchor_radius)
      : dim_(dim), k_(k), shared_(shared), pair_(pair), step_(step), anchor_(anchor_radius) {
    const double vstep = unit_ball_volume(dim) * std::pow(step, dim);
    weight_ = std::pow(vstep, k - 1);
    if (pair) {
      const int fresh = k - shared;
      if (shared == 0)
        weight_ *= unit_ball_volume(dim) * std::pow(anchor_radius, dim) * std::pow(vstep, k - 1);
      else
        weight_ *= std::pow(vstep, fresh);
    }
    points_.assign(static_cast<std::size_t>(pair ? 2 * k - shared : k), Position(dim));
  }

  double weight() const { return weight_; }
  std::span<const Position> first() const { return {points_.data(), static_cast<std::size_t>(k_)}; }
  std::span<const Position> second() const { return {points_.data() + (k_ - shared_), static_cast<std::size_t>(k_)}; }

  void draw(CounterRng& rng) {
    const Position origin(dim_);
    points_[0] = origin;
    for (int i = 1; i < k_; ++i) points_[i] = uniform_in_ball(rng, origin, step_);
    if (!pair_) return;
    const int base = k_ - shared_;
    if (shared_ == 0) {
      points_[k_] = uniform_in_ball(rng, origin, anchor_);
      for (int i = 1; i < k_; ++i) points_[k_ + i] = uniform_in_ball(rng, points_[k_], step_);
    } else {
      const Position& hub = points_[k_ - 1];
      for (int i = k_; i < base + k_; ++i) points_[i] = uniform_in_ball(rng, hub, step_);
    }
  }

 private:
  int dim_, k_, shared_;
  bool pair_;
  double step_, anchor_;
  double weight_ = 1.0;
  std::vector<Position> points_;
};

struct PairVolumes {
  double first = 0.0;
  double second = 0.0;
  double overlap = 0.0;
};

// Jittered-grid hit-or-miss over the bounding box of both regions; the
// three volumes share samples.
PairVolumes hit_or_miss(const Region& a, const Region& b, std::size_t samples, CounterRng& rng) {
  const Ball ba = a.bounding_ball();
  const Ball bb = b.bounding_ball();
  const int d = ba.center.dim();
  Position lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = std::min(ba.center[i] - ba.radius, bb.center[i] - bb.radius);
    hi[i] = std::max(ba.center[i] + ba.radius, bb.center[i] + bb.radius);
  }
  const auto per_axis = static_cast<std::size_t>(std::max(1.0, std::ceil(std::pow(static_cast<double>(samples), 1.0 / d))));
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;

  double box = 1.0;
  for (int i = 0; i < d; ++i) box *= hi[i] - lo[i];
  std::size_t in_a = 0, in_b = 0, in_both = 0;
  std::array<std::size_t, kMaxDim> cell{};
  Position x(d);
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t rest = s;
    for (int i = 0; i < d; ++i) {
      cell[i] = rest % per_axis;
      rest /= per_axis;
      x[i] = lo[i] + (hi[i] - lo[i]) * (static_cast<double>(cell[i]) + rng.uniform()) / static_cast<double>(per_axis);
    }
    const bool ia = a.contains(x);
    const bool ib = b.contains(x);
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const double unit = box / static_cast<double>(total);
  return {unit * static_cast<double>(in_a), unit * static_cast<double>(in_b), unit * static_cast<double>(in_both)};
}

// Points of S (and S') in absolute coordinates are x + chart; returns the
// product of q over all chart points except the origin.
double density_product(const Density& q, const Metric& m, const Position& x, std::span<const Position> chart, std::size_t skip) {
  double out = 1.0;
  for (std::size_t i = skip; i < chart.size(); ++i) {
    out *= q.pdf(m.wrap(x + chart[i]));
    if (out == 0.0) break;
  }
  return out;
}

bool closed_form_edges(const LocalFunctional& f, const Density& q) {
  return f.is_edge() && q.is_uniform_torus() && f.r_max * f.r < 0.5;
}

void require_certifiable(const LocalFunctional& f, const NeighborhoodMap& nbhd) {
  if (nbhd.kind == NeighborhoodKind::none) throw ConfigError("exclusive theory needs a neighborhood map");
  if (nbhd.kind == NeighborhoodKind::circumball && f.kind != FunctionalKind::morse)
    throw ConfigError("circumball neighborhoods are bounded only for the Morse functional");
}

// Largest possible vol N_1(S) for a unit-scale subset of diameter <= r_max.
double neighborhood_volume_cap(const LocalFunctional& f1, const NeighborhoodMap& nbhd, int d) {
  const double vd = unit_ball_volume(d);
  if (nbhd.kind == NeighborhoodKind::circumball) return vd * std::pow(f1.r_max / 2.0, d);
  // Jung: a set of diameter D sits in a ball of radius D sqrt(d / (2(d+1))).
  const double jung = f1.r_max * std::sqrt(d / (2.0 * (d + 1.0)));
  return std::min(f1.k * vd, vd * std::pow(1.0 + jung, d));
}

struct PairSetup {
  LocalFunctional unit;
  double anchor = 0.0;
  int k = 0;
  int dim = 0;
};

PairSetup pair_setup(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q) {
  PairSetup s{f.with_radius(1.0), 0.0, f.k, q.dim()};
  s.anchor = 2.0 * neighborhood_reach(s.unit, nbhd);
  return s;
}

// Per-sample ingredients shared by the series and the resummed curve:
// base = xi xi' W q^{2k-j-1} exp(-gamma q (vol N + vol N')), w = q vol(N cap N'),
// cross = points of S outside S' lying in N(S') plus the converse.
template <class Fn>
void for_each_pair_sample(const PairSetup& s, const NeighborhoodMap& nbhd, const Density& q, double gamma, int shared,
                          const McBudget& budget, CounterRng rng, Fn&& fn) {
  ChainSampler chain(s.dim, s.k, shared, true, s.unit.r_max, s.anchor);
  const bool uniform = q.is_uniform_torus();
  const int power = 2 * s.k - shared - 1;
  for (std::size_t i = 0; i < budget.samples; ++i) {
    chain.draw(rng);
    const double qx = uniform ? 1.0 : q.pdf(q.sample(rng));
    const double xi = s.unit(chain.first());
    const double xi2 = xi != 0.0 ? s.unit(chain.second()) : 0.0;
    if (xi * xi2 == 0.0) {
      fn(0.0, 0.0, 0);
      continue;
    }
    const Region a = nbhd.build(chain.first(), 1.0);
    const Region b = nbhd.build(chain.second(), 1.0);
    const PairVolumes v = hit_or_miss(a, b, budget.volume_samples, rng);
    const double base = xi * xi2 * chain.weight() * std::pow(qx, power) * std::exp(-gamma * qx * (v.first + v.second));
    int cross = 0;
    const auto s1 = chain.first(), s2 = chain.second();
    for (int i = 0; i < s.k - shared; ++i) cross += b.contains(s1[i]) + a.contains(s2[shared + i]);
    fn(base, qx * v.overlap, cross);
  }
}

// log of sup_{0 <= u <= cap} u^m e^{-2u} / m!.
double log_tail_kernel(int m, double cap) {
  if (m == 0) return 0.0;
  const double u = std::min(cap, m / 2.0);
  if (u <= 0.0) return -std::numeric_limits<double>::infinity();
  return m * std::log(u) - 2.0 * u - std::lgamma(m + 1.0);
}

}  // namespace

double unit_ball_volume(int d) { return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0); }

IntegralEstimate alpha_mean(const LocalFunctional& f, const Density& q, const McBudget& budget, std::uint64_t seed) {
  if (closed_form_edges(f, q)) return IntegralEstimate::exact(unit_ball_volume(q.dim()) * std::pow(f.r, q.dim()));
  CounterRng rng(seed, 0);
  const Metric m = q.metric();
  ChainSampler chain(q.dim(), f.k, 0, false, f.r_max * f.r, 0.0);
  Moments acc;
  for (std::size_t i = 0; i < budget.samples; ++i) {
    chain.draw(rng);
    const Position x = q.sample(rng);
    const double xi = f(chain.first());
    acc.add(xi == 0.0 ? 0.0 : xi * density_product(q, m, x, chain.first(), 1));
  }
  return acc.estimate(chain.weight());
}

IntegralEstimate alpha_overlap(const LocalFunctional& f, const Density& q, int shared, const McBudget& budget, std::uint64_t seed) {
  detail::require(shared >= 0 && shared <= f.k, "alpha_overlap: shared count must be 0..k");
  if (shared == 0) {
    const IntegralEstimate a = alpha_mean(f, q, budget, seed);
    return {a.value * a.value, 2.0 * a.value * a.std_error, a.method, a.samples, a.zero_hit};
  }
  if (closed_form_edges(f, q)) {
    const double a = unit_ball_volume(q.dim()) * std::pow(f.r, q.dim());
    return IntegralEstimate::exact(shared == 1 ? a * a : a);
  }
  CounterRng rng(seed, static_cast<std::uint64_t>(shared) + 1);
  const Metric m = q.metric();
  ChainSampler chain(q.dim(), f.k, shared, true, f.r_max * f.r, 0.0);
  std::vector<Position> all;
  Moments acc;
  for (std::size_t i = 0; i < budget.samples; ++i) {
    chain.draw(rng);
    const Position x = q.sample(rng);
    const double xi = f(chain.first());
    const double xi2 = xi != 0.0 ? f(chain.second()) : 0.0;
    if (xi * xi2 == 0.0) {
      acc.add(0.0);
      continue;
    }
    // Union S u S' in draw order: S then the fresh points of S'.
    all.assign(chain.first().begin(), chain.first().end());
    all.insert(all.end(), chain.second().begin() + shared, chain.second().end());
    acc.add(xi * xi2 * density_product(q, m, x, all, 1));
  }
  return acc.estimate(chain.weight());
}

MomentPrediction mean_var_f(double n, int k, const IntegralEstimate& alpha_k, std::span<const IntegralEstimate> overlaps) {
  detail::require(static_cast<int>(overlaps.size()) >= k, "mean_var_f: need alpha_{k,i} for i = 1..k");
  MomentPrediction out;
  const double lead = std::pow(n, k) / factorial(k);
  out.mean = lead * alpha_k.value;
  out.mean_se = lead * alpha_k.std_error;
  double se2 = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double c = lead * binomial(k, i) * std::pow(n, k - i) / factorial(k - i);
    out.variance += c * overlaps[static_cast<std::size_t>(i - 1)].value;
    se2 += c * overlaps[static_cast<std::size_t>(i - 1)].std_error;
  }
  out.variance_se = se2;
  return out;
}

MomentPrediction predict_moments(const LocalFunctional& f, const Density& q, double n, const McBudget& budget, std::uint64_t seed) {
  const IntegralEstimate a = alpha_mean(f, q, budget, seed);
  std::vector<IntegralEstimate> overlaps;
  for (int i = 1; i <= f.k; ++i) overlaps.push_back(alpha_overlap(f, q, i, budget, mix64(seed + static_cast<std::uint64_t>(i))));
  return mean_var_f(n, f.k, a, overlaps);
}

IntegralEstimate kappa_kj(const LocalFunctional& f, const Density& q, int shared, const McBudget& budget, std::uint64_t seed) {
  if (shared < 1 || shared > f.k) throw ContractViolation("kappa_kj: shared count must be 1..k");
  const int d = q.dim();
  const double mass = q.integral_power(2.0 * f.k - shared);
  if (f.is_edge()) {
    const double vd = unit_ball_volume(d);
    return IntegralEstimate::exact(mass * (shared == 1 ? vd * vd : vd));
  }
  const LocalFunctional unit = f.with_radius(1.0);
  CounterRng rng(seed, static_cast<std::uint64_t>(shared));
  ChainSampler chain(d, f.k, shared, true, unit.r_max, 0.0);
  Moments acc;
  for (std::size_t i = 0; i < budget.samples; ++i) {
    chain.draw(rng);
    const double xi = unit(chain.first());
    acc.add(xi == 0.0 ? 0.0 : xi * unit(chain.second()));
  }
  return acc.estimate(mass * chain.weight());
}

CovarianceModel lambda_weights(int k, double gamma, std::span<const IntegralEstimate> kappas) {
  if (!(gamma > 0.0)) throw ConfigError("lambda_weights: gamma must be positive");
  detail::require(static_cast<int>(kappas.size()) >= k, "lambda_weights: need kappa_{k,j} for j = 1..k");
  CovarianceModel model;
  model.gamma = gamma;
  model.k = k;
  std::vector<double> raw(static_cast<std::size_t>(k)), se(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double c = std::pow(gamma, -j) / (factorial(j) * std::pow(factorial(k - j), 2));
    raw[j - 1] = c * kappas[j - 1].value;
    se[j - 1] = c * kappas[j - 1].std_error;
    total += raw[j - 1];
  }
  if (!(total > 0.0)) throw InfeasibleFunctional("lambda_weights: every kappa_{k,j} vanishes");
  model.total = total;
  for (int j = 1; j <= k; ++j) {
    model.rates.push_back(j);
    model.weights.push_back(raw[j - 1] / total);
    model.std_errors.push_back(se[j - 1] / total);
  }
  return model;
}

std::vector<IntegralEstimate> kappa_kjl_series(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma,
                                               int shared, int l_max, const McBudget& budget, std::uint64_t seed) {
  if (shared < 0 || shared > f.k) throw ContractViolation("kappa_kjl: shared count must be 0..k");
  if (l_max < 0) throw ContractViolation("kappa_kjl: l_max must be non-negative");
  require_certifiable(f, nbhd);
  const PairSetup setup = pair_setup(f, nbhd, q);
  std::vector<Moments> acc(static_cast<std::size_t>(l_max) + 1);
  for_each_pair_sample(setup, nbhd, q, gamma, shared, budget, CounterRng(seed, static_cast<std::uint64_t>(shared)),
                       [&](double base, double w, int) {
                         double term = base;
                         for (auto& a : acc) {
                           a.add(term);
                           term *= w;
                         }
                       });
  std::vector<IntegralEstimate> out;
  out.reserve(acc.size());
  for (const auto& a : acc) out.push_back(a.estimate());
  // (j, l) = (0, 0) enters no weight, and the sampler covers only
  // overlapping pairs there.
  if (shared == 0) out[0] = IntegralEstimate::exact(0.0);
  return out;
}

IntegralEstimate kappa_kjl(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma, int shared, int l,
                           const McBudget& budget, std::uint64_t seed) {
  if (shared == 0 && l == 0) throw ContractViolation("kappa_kjl: (j, l) = (0, 0) is not defined");
  return kappa_kjl_series(f, nbhd, q, gamma, shared, l, budget, seed).back();
}

ExclusiveKappas exclusive_kappas(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma, int m_max,
                                 const McBudget& budget, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw ConfigError("exclusive_kappas: gamma must be positive");
  require_certifiable(f, nbhd);
  ExclusiveKappas out;
  out.k = f.k;
  out.gamma = gamma;
  out.functional = f.name;
  const PairSetup setup = pair_setup(f, nbhd, q);
  const int d = q.dim();
  out.volume_cap = gamma * q.sup() * neighborhood_volume_cap(setup.unit, nbhd, d);
  for (int j = 0; j <= f.k; ++j) {
    out.table.push_back(kappa_kjl_series(f, nbhd, q, gamma, j, m_max, budget, seed));
    const ChainSampler chain(d, f.k, j, true, setup.unit.r_max, setup.anchor);
    out.envelope.push_back(f.xi_sup * f.xi_sup * q.integral_power(2.0 * f.k - j) * chain.weight());
  }
  return out;
}

CovarianceModel exclusive_lambda_weights(const ExclusiveKappas& kappas, int l_max, double tail_tol) {
  const int k = kappas.k;
  if (l_max < k) throw ConfigError("exclusive weights: L_max must be at least k");
  for (const auto& row : kappas.table)
    if (static_cast<int>(row.size()) <= l_max) throw ContractViolation("exclusive weights: kappa table shorter than L_max");
  const double gamma = kappas.gamma;
  auto coef = [&](int j) { return std::pow(gamma, 2.0 * k - j) / (factorial(j) * std::pow(factorial(k - j), 2)); };

  CovarianceModel model;
  model.gamma = gamma;
  model.k = k;
  model.functional = kappas.functional;
  std::vector<double> raw, se;
  double total = 0.0;
  for (int l = 1; l <= l_max; ++l) {
    double v = 0.0, s2 = 0.0;
    for (int j = 0; j <= std::min(l, k); ++j) {
      const int m = l - j;
      const double c = coef(j) * std::pow(gamma, m) / factorial(m);
      const auto& e = kappas.table[j][m];
      v += c * e.value;
      s2 += c * c * e.std_error * e.std_error;
    }
    raw.push_back(v);
    se.push_back(std::sqrt(s2));
    total += v;
  }
  if (!(total > 0.0)) throw InfeasibleFunctional("exclusive weights: every Lambda_l vanishes");

  // Tail: gamma^m kappa_{k,j,m} / m! <= envelope_j * sup_u u^m e^{-2u} / m!.
  double tail = 0.0;
  double last = 0.0;
  for (int l = l_max + 1; l <= l_max + 4000; ++l) {
    double term = 0.0;
    for (int j = 0; j <= std::min(l, k); ++j) term += coef(j) * kappas.envelope[j] * std::exp(log_tail_kernel(l - j, kappas.volume_cap));
    tail += term;
    last = term;
    if (l > l_max + 10 && term < 1e-300) break;
  }
  // Past l = 2 cap the terms shrink at least geometrically by 1/2.
  tail += last;
  model.tail_bound = tail / total;
  if (model.tail_bound > tail_tol)
    throw TruncationError("exclusive weights: certified tail " + std::to_string(model.tail_bound) + " exceeds tolerance at L_max = " +
                          std::to_string(l_max));

  model.total = total;
  for (int l = 1; l <= l_max; ++l) {
    model.rates.push_back(l);
    model.weights.push_back(raw[l - 1] / total);
    model.std_errors.push_back(se[l - 1] / total);
  }
  return model;
}

std::vector<double> exclusive_curve_resummed(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma,
                                             std::span<const double> lags, const McBudget& budget, std::uint64_t seed,
                                             bool cross_occupancy) {
  require_certifiable(f, nbhd);
  const int k = f.k;
  const PairSetup setup = pair_setup(f, nbhd, q);
  std::vector<double> decay(lags.size() + 1, 1.0);
  for (std::size_t i = 0; i < lags.size(); ++i) decay[i + 1] = std::exp(-lags[i]);
  std::vector<CompensatedSum> sums(decay.size());
  for (int j = 0; j <= k; ++j) {
    const double c = std::pow(gamma, 2.0 * k - j) / (factorial(j) * std::pow(factorial(k - j), 2));
    std::vector<CompensatedSum> part(decay.size());
    for_each_pair_sample(setup, nbhd, q, gamma, j, budget, CounterRng(seed, static_cast<std::uint64_t>(j)), [&](double base, double w, int cross) {
      if (base == 0.0) return;
      for (std::size_t i = 0; i < decay.size(); ++i) {
        const double x = gamma * w * decay[i];
        double series = j == 0 ? std::expm1(x) : std::exp(x);
        if (cross_occupancy && cross > 0) {
          // Each point of one subset inside the other's neighborhood must be
          // dead at the other time.
          const double blocked = std::pow(1.0 - decay[i], cross);
          series = j == 0 ? blocked * std::exp(x) - 1.0 : blocked * series;
        }
        part[i].add(base * std::pow(decay[i], j) * series);
      }
    });
    for (std::size_t i = 0; i < decay.size(); ++i) sums[i].add(c * part[i].value() / static_cast<double>(budget.samples));
  }
  const double zero = sums[0].value();
  if (!(zero > 0.0)) throw InfeasibleFunctional("exclusive curve: zero covariance at lag 0");
  std::vector<double> out;
  for (std::size_t i = 1; i < sums.size(); ++i) out.push_back(sums[i].value() / zero);
  return out;
}

double covariance_curve(const CovarianceModel& model, double delta) {
  if (delta < 0.0) throw ContractViolation("covariance_curve: lag must be non-negative");
  CompensatedSum s;
  for (std::size_t i = 0; i < model.rates.size(); ++i) s.add(model.weights[i] * std::exp(-model.rates[i] * delta));
  return s.value();
}

TimeSeries simulate_ou_superposition(const CovarianceModel& model, std::span<const double> times, std::uint64_t seed,
                                     std::uint64_t replication) {
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ContractViolation("simulate_ou_superposition: times must increase");
  CounterRng rng(seed, replication);
  std::vector<double> state(model.rates.size());
  for (auto& x : state) x = rng.normal();
  TimeSeries out;
  out.replication = replication;
  out.times.assign(times.begin(), times.end());
  for (std::size_t t = 0; t < times.size(); ++t) {
    double v = 0.0;
    for (std::size_t c = 0; c < state.size(); ++c) {
      if (t > 0) {
        const double h = times[t] - times[t - 1];
        const double decay = std::exp(-model.rates[c] * h);
        state[c] = decay * state[c] + std::sqrt(-std::expm1(-2.0 * model.rates[c] * h)) * rng.normal();
      }
      v += std::sqrt(std::max(0.0, model.weights[c])) * state[c];
    }
    out.values.push_back(v);
  }
  return out;
}

std::string model_json(const CovarianceModel& model) {
  nlohmann::ordered_json j;
  j["rates"] = model.rates;
  j["weights"] = model.weights;
  j["std_errors"] = model.std_errors;
  j["gamma"] = model.gamma;
  j["k"] = model.k;
  j["functional"] = model.functional;
  j["normalized"] = model.normalized;
  j["tail_bound"] = model.tail_bound;
  j["total"] = model.total;
  return j.dump(2);
}

}  // namespace bdgeom
