// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Usage: bdgeom_acceptance [--jobs N] [id ...]

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "bdgeom/acceptance.hpp"

int main(int argc, char** argv) {
  bdgeom::AcceptanceOptions options;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc)
      options.jobs = static_cast<unsigned>(std::atoi(argv[++i]));
    else
      ids.push_back(std::atoi(argv[i]));
  }
  options.on_result = [](int, const bdgeom::CheckResult& r) {
    std::printf("[%s] %-40s observed %-12.6g threshold %-10.6g %s\n", r.pass ? "PASS" : "FAIL", r.test.c_str(), r.statistic, r.threshold,
                r.detail.c_str());
    std::fflush(stdout);
  };
  const auto results = bdgeom::run_acceptance(options, ids);
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}
