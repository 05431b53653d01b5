#include "sepipe/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sepipe/common.hpp"

namespace sepipe::nn {

GradCheckReport grad_check(const std::function<double(bool with_grad)>& f,
                           std::span<Parameter* const> params, double eps,
                           int max_elems_per_param, uint64_t seed) {
  for (Parameter* p : params) p->zero_grad();
  double base = f(true);
  require_runtime(std::isfinite(base), "grad_check: non-finite loss");

  GradCheckReport rep;
  std::mt19937_64 rng(seed);
  for (Parameter* p : params) {
    std::size_t n = p->value.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (static_cast<int>(n) > max_elems_per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(max_elems_per_param));
    }
    for (std::size_t i : idx) {
      double saved = p->value[i];
      p->value[i] = saved + eps;
      double fp = f(false);
      p->value[i] = saved - eps;
      double fm = f(false);
      p->value[i] = saved;
      require_runtime(std::isfinite(fp) && std::isfinite(fm), "grad_check: non-finite probe");

      double numeric = (fp - fm) / (2.0 * eps);
      double analytic = p->grad[i];
      // Relative above the floor, absolute below it: central differences at
      // this eps cannot resolve gradients much smaller than the floor times
      // the tolerance, so near-zero entries are held to |a - n| < tol * floor
      // (1e-6 absolute at the default tolerance).
      double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
      double rel = std::abs(numeric - analytic) / denom;
      ++rep.probes;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = p->name + "[" + std::to_string(i) + "]: analytic " +
                    std::to_string(analytic) + " vs numeric " + std::to_string(numeric);
      }
    }
  }
  return rep;
}

}  // namespace sepipe::nn
