#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bdgeom/verify.hpp"

namespace bdgeom {

inline constexpr int kAcceptanceCriteria = 12;

struct AcceptanceOptions {
  unsigned jobs = 1;
  std::uint64_t seed = 20261016;
  /// Called after each criterion finishes, in id order.
  std::function<void(int id, const CheckResult&)> on_result;
};

/// Runs criterion `id` (1..12) with its pinned budget and tolerance.
CheckResult acceptance_criterion(int id, const AcceptanceOptions& options);

/// Runs the listed criteria, or all of them when `ids` is empty.
std::vector<CheckResult> run_acceptance(const AcceptanceOptions& options, std::span<const int> ids = {});

}  // namespace bdgeom
