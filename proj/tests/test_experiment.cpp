#include <doctest.h>

#include <atomic>
#include <string>

#include <json.hpp>

#include "bdgeom/experiment.hpp"

using namespace bdgeom;

TEST_CASE("spec parsing is strict and round-trips") {
  const std::string text = R"({
    "mode": "covariance",
    "simulation": {"n": 500, "dim": 2, "horizon": 4, "seed": 9, "gamma": 1.5,
                   "density": {"kind": "gaussian", "sigma": 0.2}},
    "functional": "clique:3:balls",
    "sample_step": 0.5,
    "replications": 40,
    "lags": [0, 0.5, 1],
    "jobs": 2
  })";
  const ExperimentSpec spec = spec_from_json(text);
  CHECK(spec.mode == Mode::covariance);
  CHECK(spec.simulation.n == 500);
  CHECK(spec.simulation.gamma.value() == 1.5);
  CHECK(std::holds_alternative<GaussianDensity>(spec.simulation.density));
  CHECK(spec.times().size() == 9);
  CHECK(spec_to_json(spec_from_json(spec_to_json(spec))) == spec_to_json(spec));

  CHECK_THROWS_AS(spec_from_json(R"({"mode": "simulate", "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"mode": "dance"})"), ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"replications": "many"})"), ConfigError);
  CHECK_THROWS_AS(spec_from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"simulation": {"n": -1, "gamma": 1}})").validate(), ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"simulation": {"gamma": 1, "density": {"kind": "table", "cells_per_dim": 2, "values": [1, 1, 1, 2]}}})")
                      .validate(),
                  ConfigError);
  CHECK_THROWS_AS(spec_from_json(R"({"mode": "theory"})").validate(), ConfigError);
}

TEST_CASE("lags must lie in the span of the sample times") {
  ExperimentSpec spec;
  spec.mode = Mode::covariance;
  spec.replications = 30;
  spec.simulation.horizon = 1.0;
  spec.simulation.gamma = 1.0;
  spec.lags = {0.0, 2.0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.lags = {0.0, 0.5};
  CHECK_NOTHROW(spec.validate());
  spec.replications = 29;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.mode = Mode::simulate;
  spec.replications = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("parallel map is ordered and rethrows") {
  const auto squares = parallel_map<int>(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 50; ++i) CHECK(squares[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(parallel_map<int>(10, 3,
                                    [](std::size_t i) -> int {
                                      if (i == 7) throw ConfigError("boom");
                                      return 0;
                                    }),
                  ConfigError);
}

TEST_CASE("theory mode reproduces the edge weights") {
  ExperimentSpec spec;
  spec.mode = Mode::theory;
  spec.simulation.gamma = 1.0;
  const ExperimentResult result = run_experiment(spec);
  CHECK(result.passed());
  REQUIRE(!result.files.empty());
  const auto model = nlohmann::json::parse(result.files.front().second);
  CHECK(model["weights"][0].get<double>() == doctest::Approx(0.86267).epsilon(1e-4));
  CHECK(model["weights"][1].get<double>() == doctest::Approx(0.13733).epsilon(1e-4));
}

TEST_CASE("simulate mode with one replication at time zero") {
  ExperimentSpec spec;
  spec.mode = Mode::simulate;
  spec.simulation.n = 50;
  spec.simulation.gamma = 1.0;
  spec.sample_times = {0.0};
  const ExperimentResult a = run_experiment(spec);
  const ExperimentResult b = run_experiment(spec);
  REQUIRE(a.files.size() == b.files.size());
  const std::string& csv = a.files.front().second;
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  for (std::size_t i = 0; i < a.files.size(); ++i) CHECK(a.files[i].second == b.files[i].second);
  CHECK(emit_report(a) == emit_report(b));
}

TEST_CASE("jobs do not change the outputs") {
  ExperimentSpec spec;
  spec.mode = Mode::simulate;
  spec.simulation.n = 80;
  spec.simulation.gamma = 1.0;
  spec.simulation.horizon = 1.0;
  spec.replications = 6;
  const std::string serial = run_experiment(spec).files.front().second;
  spec.jobs = 3;
  CHECK(run_experiment(spec).files.front().second == serial);
}

TEST_CASE("report verdicts drive the exit code") {
  ExperimentResult empty;
  CHECK(empty.passed());
  CHECK(empty.exit_code() == 0);
  CHECK(nlohmann::json::parse(emit_report(empty))["checks"].empty());
  ExperimentResult failing;
  failing.checks.push_back({"demo", 2.0, 1.0, false, 1, 1, ""});
  CHECK(failing.exit_code() == 1);
  CHECK(nlohmann::json::parse(emit_report(failing))["pass"] == false);
  CHECK(report_table(failing).find("FAIL") != std::string::npos);
}

TEST_CASE("euler and oracle modes pass on small budgets") {
  ExperimentSpec spec;
  spec.mode = Mode::euler;
  spec.simulation.gamma = 1.0;
  spec.replications = 10;
  CHECK(run_experiment(spec).passed());
  spec.mode = Mode::oracle;
  spec.replications = 1;
  spec.budget.samples = 2000;
  const ExperimentResult oracle = run_experiment(spec);
  REQUIRE(oracle.checks.size() == 1);
  CHECK(oracle.checks.front().statistic >= 0.8);
}
