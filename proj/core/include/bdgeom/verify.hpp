#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdgeom/geometry.hpp"
#include "bdgeom/process.hpp"
#include "bdgeom/statistics.hpp"

namespace bdgeom {

struct CovarianceEstimate {
  std::vector<double> lags;
  std::vector<double> values;
  /// 95% normal-approximation half widths.
  std::vector<double> ci_half_widths;
  std::size_t replications = 0;
};

/// Normalized covariance of (value(t), value(t + lag)) across replications.
/// Each replication contributes the average over every time origin t on the
/// grid with t + lag also on it, centered by the cross-replication mean at
/// each time; the ratio to lag 0 gets a delta-method CI over replications.
/// With `pool_origins` false only the first sample time is used as origin.
CovarianceEstimate estimate_covariance(std::span<const TimeSeries> paths, std::span<const double> lags, bool pool_origins = true);

/// sup_u |F_n(u) - Phi(u)| for an already standardized sample.
double ks_distance(std::span<const double> sample);

/// (x - mean) / sd with the sample moments. Constant input maps to zeros.
std::vector<double> standardize(std::span<const double> sample);

struct TestOutcome {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic p-value.
TestOutcome ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square goodness of fit of counts to Poisson(mean); tail bins
/// are pooled until every expected count is at least 5.
TestOutcome poisson_chi_square(std::span<const std::uint64_t> counts, double mean);

/// Overlap sizes I_J of l subsets, J a nonempty subset of {0..l-1} encoded
/// as a bitmask.
class IntersectionPattern {
 public:
  explicit IntersectionPattern(int subsets);

  int subsets() const { return l_; }
  void set(unsigned mask, int count);
  int count(unsigned mask) const { return counts_.at(mask); }
  /// |S_i| = sum of I_J over J containing i.
  int subset_size(int i) const;
  /// |I| = sum of all I_J.
  int total() const;
  std::string to_string() const;

 private:
  int l_;
  std::vector<int> counts_;
};

/// h(S_1..S_l, process). The process is passed with its points in one
/// chart; the subsets hold points of the process (compare by position).
using MeckeTest = std::function<double(std::span<const std::vector<Position>> subsets, std::span<const Position> process)>;

struct MeckeResult {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  bool agree = false;
};

/// Compares E[sum over pattern-obeying tuples of h(S, P)] with
/// n^{|I|} / prod I_J! E[h(Pi_I(X), X u P)] by Monte Carlo on both sides.
/// Agreement: |lhs - rhs| <= 3 combined standard errors.
MeckeResult mecke_oracle(const MeckeTest& h, const IntersectionPattern& pattern, double n, const Density& q, std::size_t samples,
                         std::uint64_t seed);

struct MeckeCase {
  std::string name;
  MeckeTest h;
  IntersectionPattern pattern;
  double n = 8.0;
};

/// The fixed 12-case battery: counts, edge and clique indicators, shared
/// points, and process-dependent emptiness tests.
std::vector<MeckeCase> mecke_battery();

struct EulerResult {
  long long value = 0;
  /// N_k for k = 0..d.
  std::vector<std::size_t> critical;
  std::size_t degenerate = 0;
};

/// sum_k (-1)^k N_k with N_0 = |points| and N_k the (k+1)-subsets whose
/// circumcenter is inside their open simplex and whose open circumball holds
/// no other point. Unbounded radius range; Euclidean coordinates.
EulerResult morse_euler_check(std::span<const Position> points);
EulerResult morse_euler_check(const Configuration& cfg);

/// One row of a verification report.
struct CheckResult {
  std::string test;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;
  std::string detail;
};

/// JSON array of {test, statistic, threshold, pass, seed, budget, detail}.
std::string report_json(std::span<const CheckResult> results);

}  // namespace bdgeom
