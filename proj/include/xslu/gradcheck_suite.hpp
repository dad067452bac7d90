#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xslu/gradcheck.hpp"

namespace xslu {

struct SuiteCheck {
  std::string name;
  std::uint64_t seed;
  GradCheckReport report;
};

struct GradcheckSuiteOptions {
  std::size_t n_seeds = 5;
  double h = 1e-6;
  double tol = 1e-4;
  // scales the tensor dims used by the checks; "small" keeps the full-model
  // check affordable, "medium" is for manual poking
  std::string scale = "small";
};

// finite-difference checks for every forward op, the distillation losses in
// isolation, and the full weighted loss through a 2-block dual model
std::vector<SuiteCheck> run_gradcheck_suite(const GradcheckSuiteOptions& options);

bool all_passed(const std::vector<SuiteCheck>& checks);

}  // namespace xslu
