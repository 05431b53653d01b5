#pragma once

#include <string>
#include <vector>

#include "sepipe/nn/grad_check.hpp"

namespace sepipe {

struct GradSuiteItem {
  std::string name;
  nn::GradCheckReport report;
  bool passed = false;
};

// Finite-difference verification of every differentiable building block:
// scope "layers" covers the tensor ops and attention variants, "losses" the
// training objectives, "model" a thin end-to-end two-stage model, "all" runs
// everything. 64-bit, central differences.
std::vector<GradSuiteItem> run_grad_suite(const std::string& scope, double tol = 1e-3,
                                          double eps = 1e-4);

}  // namespace sepipe
