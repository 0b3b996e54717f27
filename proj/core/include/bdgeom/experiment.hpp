#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bdgeom/functionals.hpp"
#include "bdgeom/process.hpp"
#include "bdgeom/statistics.hpp"
#include "bdgeom/theory.hpp"
#include "bdgeom/verify.hpp"

namespace bdgeom {

enum class Mode { simulate, theory, covariance, gaussianity, oracle, euler, full };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

struct ExperimentSpec {
  Mode mode = Mode::simulate;
  SimulationConfig simulation;
  std::string functional = "clique:2";
  /// Explicit sample times; when empty, 0..horizon every `sample_step`.
  std::vector<double> sample_times;
  double sample_step = 0.25;
  std::size_t replications = 1;
  std::vector<double> lags;
  std::string output_dir = ".";
  unsigned jobs = 1;
  McBudget budget{20000, 4096};
  int l_max = 20;
  double tail_tol = 1e-8;
  /// Largest L_max tried when the tail certificate fails at l_max.
  int l_max_cap = 160;
  /// Allowed |empirical - theory| in covariance mode.
  double tolerance = 0.05;
  /// d_K threshold in gaussianity mode.
  double ks_threshold = 0.05;
  /// Points per configuration in euler mode.
  std::size_t euler_points = 20;

  void validate() const;
  std::vector<double> times() const;
};

/// Parses a JSON config; unknown keys and wrong types are ConfigErrors.
ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

struct ExperimentResult {
  Mode mode = Mode::simulate;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  /// File name -> contents, in write order.
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::string> notes;

  bool passed() const;
  /// 0 when every check passes, 1 otherwise.
  int exit_code() const { return passed() ? 0 : 1; }
};

/// Runs fn(i) for i in [0, count) on `jobs` threads; results land by index,
/// so the output does not depend on scheduling.
template <class T>
std::vector<T> parallel_map(std::size_t count, unsigned jobs, const std::function<T(std::size_t)>& fn);

/// One sample_path per replication 0..reps-1.
std::vector<TimeSeries> collect_paths(const SimulationConfig& cfg, const FunctionalSelection& sel, std::span<const double> times,
                                      std::size_t replications, unsigned jobs);

/// Theory model for the selection: plain lambda weights, or exclusive
/// Lambda weights with L_max doubled until the tail is certified (up to
/// l_max_cap). Notes describe closed forms used and any escalation.
CovarianceModel build_model(const ExperimentSpec& spec, const FunctionalSelection& sel, std::vector<std::string>& notes);

/// Runs the spec's mode and returns the report files without touching disk.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Writes result files plus summary.json into spec.output_dir.
void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result);

/// {mode, seed, pass, checks: [...], notes: [...]}
std::string emit_report(const ExperimentResult& result);
/// Fixed-width table, one line per check.
std::string report_table(const ExperimentResult& result);

/// cov.csv: lag,emp,ci,theory
std::string covariance_csv(const CovarianceEstimate& est, const CovarianceModel& model);

// ---------------------------------------------------------------------------

template <class T>
std::vector<T> parallel_map(std::size_t count, unsigned jobs, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(count);
  const unsigned workers = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::exception_ptr failure;
  std::mutex guard;
  auto run = [&](unsigned w) {
    for (std::size_t i = w; i < count; i += workers) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace bdgeom
