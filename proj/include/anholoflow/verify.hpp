#pragma once

// Property suite shared by the `verify` subcommand and the acceptance binary.

#include <cstdint>
#include <string>
#include <vector>

namespace anholoflow {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string note;
  bool lower_bound = false;  // pass means residual >= tol
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<CheckResult> checks;

  bool pass() const;
  // Worst residual relative to its tolerance, for one-line summaries.
  const CheckResult* worst() const;
};

// Criteria 1..13; 14 (repeatability of the whole suite) is checked by callers.
int criterion_count();
CriterionResult run_criterion(int id, std::uint64_t seed);
std::vector<CriterionResult> run_suite(std::uint64_t seed, const std::vector<int>& ids = {});

}  // namespace anholoflow
