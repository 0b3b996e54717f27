#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bdgeom/functionals.hpp"
#include "bdgeom/process.hpp"
#include "bdgeom/statistics.hpp"

namespace bdgeom {

enum class EstimateMethod { closed_form, monte_carlo };

struct IntegralEstimate {
  double value = 0.0;
  double std_error = 0.0;
  EstimateMethod method = EstimateMethod::closed_form;
  std::size_t samples = 0;
  /// Monte Carlo run in which no sample hit the support.
  bool zero_hit = false;

  static IntegralEstimate exact(double v) { return {v, 0.0, EstimateMethod::closed_form, 0, false}; }
};

struct McBudget {
  std::size_t samples = 200000;
  /// Hit-or-miss samples per region-volume evaluation.
  std::size_t volume_samples = 100000;
};

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

/// alpha_k = E[xi_{k,r}(X_1..X_k)] for i.i.d. X ~ q.
IntegralEstimate alpha_mean(const LocalFunctional& f, const Density& q, const McBudget& budget, std::uint64_t seed);

/// alpha_{k,i} = E[xi(X) xi(X')] where X and X' share i of their k points.
/// i = 0 returns alpha_k^2 with the error propagated.
IntegralEstimate alpha_overlap(const LocalFunctional& f, const Density& q, int shared, const McBudget& budget, std::uint64_t seed);

struct MomentPrediction {
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
};

/// Mean n^k alpha_k / k! and variance
/// (n^k/k!) sum_{i=1..k} C(k,i) n^{k-i}/(k-i)! alpha_{k,i}.
/// `overlaps[i-1]` holds alpha_{k,i}.
MomentPrediction mean_var_f(double n, int k, const IntegralEstimate& alpha_k, std::span<const IntegralEstimate> overlaps);

/// Closed-form or Monte Carlo alpha_k and alpha_{k,1..k}, then mean_var_f.
MomentPrediction predict_moments(const LocalFunctional& f, const Density& q, double n, const McBudget& budget, std::uint64_t seed);

/// kappa_{k,j}: integral of q^{2k-j} times the unit-scale integral of
/// xi(0, y) xi(y') over the 2k-j-1 free points, S and S' sharing j points.
IntegralEstimate kappa_kj(const LocalFunctional& f, const Density& q, int shared, const McBudget& budget, std::uint64_t seed);

/// Finite superposition of unit-variance OU covariances: curve(D) = sum w_l e^{-rate_l D}.
struct CovarianceModel {
  std::vector<double> rates;
  std::vector<double> weights;
  std::vector<double> std_errors;
  double gamma = 0.0;
  int k = 0;
  std::string functional;
  bool normalized = true;
  /// Certified bound on the omitted tail, relative to the retained mass.
  double tail_bound = 0.0;
  /// Sum of the unnormalized weights (the limiting r^d-scaled variance).
  double total = 0.0;
};

/// Plain statistic: lambda~_j = gamma^{-j} kappa_{k,j} / (j! ((k-j)!)^2),
/// normalized; `kappas[j-1]` holds kappa_{k,j}.
CovarianceModel lambda_weights(int k, double gamma, std::span<const IntegralEstimate> kappas);

/// kappa_{k,j,l}, l = 0..l_max, in one pass (shared samples).
std::vector<IntegralEstimate> kappa_kjl_series(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma,
                                               int shared, int l_max, const McBudget& budget, std::uint64_t seed);

IntegralEstimate kappa_kjl(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma, int shared, int l,
                           const McBudget& budget, std::uint64_t seed);

/// All kappa_{k,j,m} for j = 0..k and m = 0..m_max, plus the per-j
/// deterministic envelope used by the tail certificate.
struct ExclusiveKappas {
  int k = 0;
  double gamma = 0.0;
  std::string functional;
  /// table[j][m] = kappa_{k,j,m} (the m-th power of the overlap volume).
  std::vector<std::vector<IntegralEstimate>> table;
  /// envelope[j] bounds xi_sup^2 * int q^{2k-j} * (volume of the sampled support).
  std::vector<double> envelope;
  /// Upper bound on gamma * sup q * vol(N_1).
  double volume_cap = 0.0;
};

ExclusiveKappas exclusive_kappas(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma, int m_max,
                                 const McBudget& budget, std::uint64_t seed);

/// Exclusive statistic: Lambda~_l = sum_{j=0}^{min(l,k)} gamma^{2k+l-2j}
/// kappa_{k,j,l-j} / ((l-j)! j! ((k-j)!)^2), l = 1..l_max, normalized.
/// Throws TruncationError when the certified relative tail exceeds tail_tol
/// (pass +infinity to only report it).
CovarianceModel exclusive_lambda_weights(const ExclusiveKappas& kappas, int l_max, double tail_tol = 1e-8);

/// Untruncated limiting covariance of the exclusive statistic at each lag,
/// normalized by its value at 0, by direct Monte Carlo of the resummed
/// series (exp(gamma q vol e^{-D}) in place of the power series).
/// With `cross_occupancy`, each point of S \ S' inside N(S') (and of S' \ S
/// inside N(S)) contributes the factor 1 - e^{-D} it needs to be absent at
/// the other time; the weights above omit that factor.
std::vector<double> exclusive_curve_resummed(const LocalFunctional& f, const NeighborhoodMap& nbhd, const Density& q, double gamma,
                                             std::span<const double> lags, const McBudget& budget, std::uint64_t seed,
                                             bool cross_occupancy = false);

double covariance_curve(const CovarianceModel& model, double delta);

/// Exact simulation of sum_l sqrt(w_l) U_l with independent stationary OU
/// components of rate l.
TimeSeries simulate_ou_superposition(const CovarianceModel& model, std::span<const double> times, std::uint64_t seed,
                                     std::uint64_t replication = 0);

/// {rates, weights, std_errors, gamma, k, functional, tail_bound, total}
std::string model_json(const CovarianceModel& model);

}  // namespace bdgeom
