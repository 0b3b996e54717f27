#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdgeom/theory.hpp"
#include "bdgeom/verify.hpp"

using namespace bdgeom;

namespace {

std::vector<TimeSeries> white_noise(std::size_t reps, std::size_t len, std::uint64_t seed) {
  std::vector<TimeSeries> out;
  for (std::size_t r = 0; r < reps; ++r) {
    CounterRng rng(seed, r);
    TimeSeries ts{r, {}, {}};
    for (std::size_t i = 0; i < len; ++i) {
      ts.times.push_back(0.25 * static_cast<double>(i));
      ts.values.push_back(rng.normal());
    }
    out.push_back(ts);
  }
  return out;
}

}  // namespace

TEST_CASE("covariance estimator: lag zero, white noise, contract errors") {
  const double lags[] = {0.0, 0.25, 1.0};
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const CovarianceEstimate est = estimate_covariance(white_noise(200, 20, seed), lags);
    CHECK(est.values[0] == 1.0);
    for (std::size_t i = 1; i < 3; ++i) inside += std::abs(est.values[i]) <= est.ci_half_widths[i];
  }
  // 95% intervals over 80 independent lag estimates.
  CHECK(inside >= 68);

  const auto few = white_noise(10, 20, 2);
  CHECK_THROWS_AS(estimate_covariance(few, lags), ContractViolation);
  auto bad = white_noise(40, 20, 3);
  bad[5].times[3] += 0.01;
  CHECK_THROWS_AS(estimate_covariance(bad, lags), ContractViolation);
  const double off_grid[] = {0.3};
  CHECK_THROWS_AS(estimate_covariance(white_noise(40, 20, 4), off_grid), ContractViolation);
}

TEST_CASE("covariance estimator recovers an OU superposition") {
  const IntegralEstimate kappas[] = {IntegralEstimate::exact(M_PI * M_PI), IntegralEstimate::exact(M_PI)};
  const CovarianceModel model = lambda_weights(2, 1.0, kappas);
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(0.25 * i);
  std::vector<TimeSeries> paths;
  for (std::uint64_t r = 0; r < 500; ++r) paths.push_back(simulate_ou_superposition(model, times, 5, r));
  std::vector<double> lags;
  for (int i = 0; i <= 12; ++i) lags.push_back(0.25 * i);
  const CovarianceEstimate est = estimate_covariance(paths, lags);
  int inside = 0;
  for (std::size_t i = 0; i < lags.size(); ++i)
    if (std::abs(est.values[i] - covariance_curve(model, lags[i])) <= est.ci_half_widths[i] + 1e-12) ++inside;
  CHECK(inside >= static_cast<int>(0.9 * static_cast<double>(lags.size())));
}

TEST_CASE("kolmogorov distance") {
  const std::vector<double> mass(100, 0.0);
  CHECK(ks_distance(mass) == doctest::Approx(0.5));
  CounterRng rng(6, 0);
  std::vector<double> normal;
  for (int i = 0; i < 10000; ++i) normal.push_back(rng.normal());
  CHECK(ks_distance(normal) < 0.03);
  for (auto& x : normal) x += 10.0;
  CHECK(ks_distance(normal) == doctest::Approx(1.0).epsilon(1e-6));
  const auto z = standardize(std::vector<double>{1, 2, 3, 4});
  CHECK(z[0] == doctest::Approx(-z[3]));
  CHECK(standardize(std::vector<double>{2, 2, 2})[1] == 0.0);
}

TEST_CASE("two-sample KS and poisson chi-square") {
  CounterRng a(8, 0), b(8, 1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 2000; ++i) {
    xs.push_back(a.normal());
    ys.push_back(b.normal());
  }
  CHECK(ks_two_sample(xs, ys).p_value > 0.01);
  for (auto& y : ys) y += 0.3;
  CHECK(ks_two_sample(xs, ys).p_value < 1e-6);
  const std::vector<double> same(50, 1.0);
  CHECK(ks_two_sample(same, same).statistic == 0.0);

  std::vector<std::uint64_t> counts;
  CounterRng c(9, 0);
  for (int i = 0; i < 3000; ++i) counts.push_back(c.poisson(20.0));
  CHECK(poisson_chi_square(counts, 20.0).p_value > 0.01);
  CHECK(poisson_chi_square(counts, 22.0).p_value < 1e-6);
}

TEST_CASE("intersection patterns") {
  IntersectionPattern p(2);
  p.set(0b01, 1);
  p.set(0b10, 1);
  p.set(0b11, 1);
  CHECK(p.subset_size(0) == 2);
  CHECK(p.subset_size(1) == 2);
  CHECK(p.total() == 3);
  CHECK_THROWS(p.set(0, 1));
  CHECK_THROWS(IntersectionPattern(5));
}

TEST_CASE("mecke identity on simple cases") {
  const Density q = Density::uniform(2);
  IntersectionPattern one(1);
  one.set(0b1, 1);
  const MeckeTest count = [](std::span<const std::vector<Position>>, std::span<const Position>) { return 1.0; };
  const MeckeResult c = mecke_oracle(count, one, 8.0, q, 4000, 1);
  CHECK(c.rhs == doctest::Approx(8.0));
  CHECK(c.agree);

  IntersectionPattern pair(1);
  pair.set(0b1, 2);
  const MeckeTest edge = [](std::span<const std::vector<Position>> s, std::span<const Position>) {
    return clique_indicator(s[0], 2, 0.3, Metric::torus(2));
  };
  const MeckeResult e = mecke_oracle(edge, pair, 8.0, q, 8000, 2);
  CHECK(e.agree);
  CHECK(std::abs(e.rhs - 32.0 * M_PI * 0.09) < 4.0 * e.rhs_se + 1e-12);

  IntersectionPattern shared(2);
  shared.set(0b01, 1);
  shared.set(0b10, 1);
  shared.set(0b11, 1);
  const MeckeTest star = [](std::span<const std::vector<Position>> s, std::span<const Position>) {
    return clique_indicator(s[0], 2, 0.3, Metric::torus(2)) * clique_indicator(s[1], 2, 0.3, Metric::torus(2));
  };
  CHECK(mecke_oracle(star, shared, 8.0, q, 8000, 3).agree);

  IntersectionPattern huge(1);
  huge.set(0b1, 7);
  CHECK_THROWS_AS(mecke_oracle(count, huge, 8.0, q, 10, 4), ContractViolation);
}

TEST_CASE("mecke battery has twelve cases and mostly agrees") {
  const auto battery = mecke_battery();
  REQUIRE(battery.size() == 12);
  int agree = 0;
  for (std::size_t i = 0; i < battery.size(); ++i)
    if (mecke_oracle(battery[i].h, battery[i].pattern, battery[i].n, Density::uniform(2), 3000, 100 + i).agree) ++agree;
  CHECK(agree >= 10);
}

TEST_CASE("morse euler characteristic") {
  const Position single[] = {Position{0.3, 0.3}};
  CHECK(morse_euler_check(single).value == 1);
  const Position line[] = {Position{0.0}, Position{1.0}, Position{3.0}};
  const EulerResult l = morse_euler_check(line);
  CHECK(l.critical == std::vector<std::size_t>{3, 2});
  CHECK(l.value == 1);
  CounterRng rng(12, 0);
  for (int t = 0; t < 20; ++t) {
    std::vector<Position> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(Position{rng.uniform(), rng.uniform()});
    CHECK(morse_euler_check(pts).value == 1);
  }
}

TEST_CASE("report json lists every field") {
  const CheckResult rows[] = {{"demo", 0.5, 1.0, true, 7, 100, "x"}};
  const std::string json = report_json(rows);
  for (const char* key : {"test", "statistic", "threshold", "pass", "seed", "budget"}) CHECK(json.find(key) != std::string::npos);
}
