#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sepipe/nn/tensor.hpp"

namespace sepipe::nn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t probes = 0;
  std::string worst;  // "param[i]: analytic vs numeric"

  bool ok(double tol) const { return max_rel_err < tol; }
};

// Central-difference check of reverse-mode gradients. `f(with_grad)` must
// evaluate the scalar loss from the current parameter values; when with_grad
// is true it must also leave d(loss)/d(param) in each param's grad buffer
// (typically by recording a tape and calling backward). Up to
// max_elems_per_param elements are probed per parameter, chosen by `seed`.
GradCheckReport grad_check(const std::function<double(bool with_grad)>& f,
                           std::span<Parameter* const> params, double eps = 1e-4,
                           int max_elems_per_param = 8, uint64_t seed = 0);

}  // namespace sepipe::nn
