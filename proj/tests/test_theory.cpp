#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "bdgeom/theory.hpp"
#include "bdgeom/verify.hpp"

using namespace bdgeom;

namespace {

const double kPi = std::acos(-1.0);

std::vector<IntegralEstimate> edge_kappas() {
  return {IntegralEstimate::exact(kPi * kPi), IntegralEstimate::exact(kPi)};
}

}  // namespace

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(kPi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0));
}

TEST_CASE("edge moments on the uniform torus") {
  const Density q = Density::uniform(2);
  const LocalFunctional edge = make_clique(2, 0.05);
  const McBudget budget{20000, 1000};
  const IntegralEstimate a2 = alpha_mean(edge, q, budget, 1);
  CHECK(a2.method == EstimateMethod::closed_form);
  CHECK(a2.value == doctest::Approx(kPi * 0.0025));
  CHECK(alpha_overlap(edge, q, 2, budget, 1).value == doctest::Approx(kPi * 0.0025));
  CHECK(alpha_overlap(edge, q, 0, budget, 1).value == doctest::Approx(std::pow(kPi * 0.0025, 2)));

  const MomentPrediction m = predict_moments(edge, q, 100.0, budget, 1);
  CHECK(m.mean == doctest::Approx(100.0 * 100.0 * kPi * 0.0025 / 2.0));
  CHECK(m.mean == doctest::Approx(39.27).epsilon(1e-4));
}

TEST_CASE("variance formula for k = 2 expands as expected") {
  const double n = 37.0;
  const IntegralEstimate a1 = IntegralEstimate::exact(0.013), a2 = IntegralEstimate::exact(0.2);
  const IntegralEstimate overlaps[] = {a1, a2};
  const MomentPrediction m = mean_var_f(n, 2, IntegralEstimate::exact(0.2), overlaps);
  CHECK(m.variance == doctest::Approx(n * n / 2.0 * (2.0 * n * a1.value + a2.value)));
  const IntegralEstimate zeros[] = {IntegralEstimate::exact(0), IntegralEstimate::exact(0)};
  CHECK(mean_var_f(n, 2, IntegralEstimate::exact(0.2), zeros).variance == 0.0);
}

TEST_CASE("monte carlo alpha agrees with the closed form") {
  LocalFunctional edge = make_clique(2, 0.05);
  edge.kind = FunctionalKind::custom;  // forces the sampler
  const IntegralEstimate est = alpha_mean(edge, Density::uniform(2), McBudget{200000, 1000}, 3);
  CHECK(est.method == EstimateMethod::monte_carlo);
  // The chained proposal keeps the partner inside the edge radius, so the
  // uniform case has zero sampling variance.
  CHECK(std::abs(est.value - kPi * 0.0025) <= 4.0 * est.std_error + 1e-12);
}

TEST_CASE("edge kappas and weights") {
  const Density q = Density::uniform(2);
  const LocalFunctional edge = make_clique(2, 1.0);
  const McBudget budget{20000, 1000};
  CHECK(kappa_kj(edge, q, 1, budget, 1).value == doctest::Approx(kPi * kPi));
  CHECK(kappa_kj(edge, q, 2, budget, 1).value == doctest::Approx(kPi));
  CHECK_THROWS_AS(kappa_kj(edge, q, 0, budget, 1), ContractViolation);

  const CovarianceModel model = lambda_weights(2, 1.0, edge_kappas());
  REQUIRE(model.weights.size() == 2);
  CHECK(model.rates == std::vector<double>{1.0, 2.0});
  CHECK(model.weights[0] == doctest::Approx(kPi / (kPi + 0.5)));
  CHECK(model.weights[0] == doctest::Approx(0.86267).epsilon(1e-4));
  CHECK(model.weights[1] == doctest::Approx(0.13733).epsilon(1e-4));
  CHECK(covariance_curve(model, 0.0) == doctest::Approx(1.0));
  CHECK(covariance_curve(model, 1.0) == doctest::Approx(0.33594).epsilon(1e-4));
}

TEST_CASE("monte carlo kappa for triangles is positive and stable in the radius") {
  const Density q = Density::uniform(2);
  LocalFunctional edge = make_clique(2, 1.0);
  edge.kind = FunctionalKind::custom;
  const IntegralEstimate k21 = kappa_kj(edge, q, 1, McBudget{100000, 1000}, 5);
  CHECK(k21.method == EstimateMethod::monte_carlo);
  CHECK(std::abs(k21.value - kPi * kPi) <= 4.0 * k21.std_error + 1e-9);

  const IntegralEstimate a = kappa_kj(make_clique(3, 0.1), q, 2, McBudget{50000, 1000}, 6);
  const IntegralEstimate b = kappa_kj(make_clique(3, 0.05), q, 2, McBudget{50000, 1000}, 7);
  CHECK(a.value > 0.0);
  CHECK(std::abs(a.value - b.value) < 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("weights: normalization, scale invariance, limits, infeasibility") {
  std::vector<IntegralEstimate> k = {IntegralEstimate::exact(3.1), IntegralEstimate::exact(0.7), IntegralEstimate::exact(0.2)};
  const CovarianceModel base = lambda_weights(3, 0.8, k);
  double sum = 0;
  for (double w : base.weights) sum += w;
  CHECK(sum == doctest::Approx(1.0));
  for (auto& e : k) e.value *= 17.0;
  const CovarianceModel scaled = lambda_weights(3, 0.8, k);
  for (std::size_t i = 0; i < 3; ++i) CHECK(scaled.weights[i] == doctest::Approx(base.weights[i]).epsilon(1e-14));

  CHECK(lambda_weights(2, 1e3, edge_kappas()).weights[0] > 0.99);
  CHECK(lambda_weights(2, 1e-3, edge_kappas()).weights[1] > 0.99);
  const IntegralEstimate zeros[] = {IntegralEstimate::exact(0), IntegralEstimate::exact(0)};
  CHECK_THROWS_AS(lambda_weights(2, 1.0, zeros), InfeasibleFunctional);
}

TEST_CASE("covariance curve is completely monotone") {
  const CovarianceModel model = lambda_weights(2, 1.0, edge_kappas());
  const double h = 0.1;
  for (int order = 1; order <= 4; ++order) {
    for (double x = 0; x < 3; x += 0.25) {
      double diff = 0;
      for (int i = 0; i <= order; ++i) {
        const double binom = std::tgamma(order + 1) / (std::tgamma(i + 1) * std::tgamma(order - i + 1));
        diff += ((order - i) % 2 == 0 ? 1.0 : -1.0) * binom * covariance_curve(model, x + i * h);
      }
      CHECK((order % 2 == 0 ? diff : -diff) > 0.0);
    }
  }
}

TEST_CASE("exclusive kappas and truncation") {
  const Density q = Density::uniform(2);
  const LocalFunctional edge = make_clique(2, 1.0);
  const NeighborhoodMap balls = make_neighborhood(NeighborhoodKind::balls, edge);
  const McBudget budget{4000, 512};
  const auto series = kappa_kjl_series(edge, balls, q, 1.0, 1, 3, budget, 9);
  REQUIRE(series.size() == 4);
  for (const auto& e : series) CHECK(e.value > 0.0);
  CHECK(series[1].std_error > 0.0);
  CHECK_THROWS_AS(kappa_kjl(edge, balls, q, 1.0, 0, 0, budget, 9), ContractViolation);
  CHECK(kappa_kjl(edge, balls, q, 1.0, 0, 2, budget, 9).value > 0.0);

  const ExclusiveKappas table = exclusive_kappas(edge, balls, q, 1.0, 20, budget, 10);
  const CovarianceModel model = exclusive_lambda_weights(table, 20, std::numeric_limits<double>::infinity());
  double sum = 0;
  for (double w : model.weights) {
    CHECK(w > 0.0);
    sum += w;
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(model.tail_bound > 0.0);
  CHECK_THROWS_AS(exclusive_lambda_weights(table, 20, model.tail_bound / 10.0), TruncationError);
  CHECK_NOTHROW(exclusive_lambda_weights(table, 20, model.tail_bound * 10.0));
}

TEST_CASE("circumball neighborhoods are only certified for the morse functional") {
  const LocalFunctional tri = make_clique(3, 1.0);
  const NeighborhoodMap ball = make_neighborhood(NeighborhoodKind::circumball, tri);
  CHECK_THROWS_AS(exclusive_kappas(tri, ball, Density::uniform(2), 1.0, 4, McBudget{100, 64}, 1), ConfigError);
}

TEST_CASE("OU superposition: unit variance and matching autocorrelation") {
  const CovarianceModel model = lambda_weights(2, 1.0, edge_kappas());
  const std::vector<double> times = {0.0, 0.5, 1.0};
  const std::size_t reps = 10000;
  double s0 = 0, s00 = 0, s01 = 0, s02 = 0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const TimeSeries ts = simulate_ou_superposition(model, times, 31, rep);
    s0 += ts.values[0];
    s00 += ts.values[0] * ts.values[0];
    s01 += ts.values[0] * ts.values[1];
    s02 += ts.values[0] * ts.values[2];
  }
  const double n = static_cast<double>(reps);
  CHECK(std::abs(s00 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s0 / n) < 3.0 / std::sqrt(n));
  CHECK(std::abs(s01 / n - covariance_curve(model, 0.5)) < 0.02);
  CHECK(std::abs(s02 / n - covariance_curve(model, 1.0)) < 0.02);

  CovarianceModel single;
  single.rates = {3.0};
  single.weights = {1.0};
  single.std_errors = {0.0};
  double s = 0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const TimeSeries ts = simulate_ou_superposition(single, times, 32, rep);
    s += ts.values[0] * ts.values[1];
  }
  CHECK(std::abs(s / n - std::exp(-1.5)) < 0.03);
}

TEST_CASE("model json schema") {
  const auto j = nlohmann::json::parse(model_json(lambda_weights(2, 1.0, edge_kappas())));
  for (const char* key : {"rates", "weights", "std_errors", "gamma", "k", "functional"}) CHECK(j.contains(key));
  CHECK(j["weights"].size() == 2);
}
