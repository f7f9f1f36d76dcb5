#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tglm/error.hpp"
#include "tglm/params.hpp"
#include "tglm/rng.hpp"

namespace tglm {

struct GradCheckOptions {
  double eps = 1e-5;                 // central-difference step, in [1e-6, 1e-3]
  std::int64_t max_coords_per_tensor = 24;
  std::uint64_t coord_seed = 17;     // which coordinates get probed
};

// Central-difference oracle for every trained objective in the repository.
//
// `loss` must recompute the objective from the current parameter values;
// when called with want_grad=true it must also refill the gradient arrays
// registered in `params`. The loss has to be deterministic under its frozen
// noise: two calls at the same point must agree bit-for-bit.
//
// Returns max over probed coordinates of
//   |analytic - central| / max(|analytic|, |central|, 1e-12).
template <typename T = double>
double grad_check(const std::function<double(bool want_grad)>& loss,
                  ParamSet<T>& params, const GradCheckOptions& opt = {}) {
  static_assert(std::is_same_v<T, double>,
                "grad_check requires the 64-bit instantiation");
  TGLM_CHECK_ARG(opt.eps >= 1e-6 && opt.eps <= 1e-3,
                 "grad_check: eps out of [1e-6, 1e-3]");

  const double l0 = loss(true);
  const double l1 = loss(false);
  TGLM_CHECK_CONTRACT(l0 == l1,
                      "grad_check: loss is not deterministic under fixed seed");

  // Snapshot analytic gradients before finite differences clobber them.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.count());
  for (const auto& r : params.refs()) {
    analytic.emplace_back(r.grad->data(), r.grad->data() + r.grad->size());
  }

  Rng coord_rng(opt.coord_seed);
  double max_rel = 0.0;
  std::size_t ti = 0;
  for (const auto& r : params.refs()) {
    const std::int64_t n = r.value->size();
    std::vector<std::int64_t> coords;
    if (n <= opt.max_coords_per_tensor) {
      coords.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      for (std::int64_t i = 0; i < opt.max_coords_per_tensor; ++i)
        coords.push_back(coord_rng.uniform_index(n));
    }
    for (std::int64_t c : coords) {
      const double orig = (*r.value)[c];
      (*r.value)[c] = orig + opt.eps;
      const double lp = loss(false);
      (*r.value)[c] = orig - opt.eps;
      const double lm = loss(false);
      (*r.value)[c] = orig;
      const double fd = (lp - lm) / (2.0 * opt.eps);
      const double an = analytic[ti][static_cast<std::size_t>(c)];
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-12});
      max_rel = std::max(max_rel, std::abs(an - fd) / denom);
    }
    ++ti;
  }
  // Leave the analytic gradients in place for callers that inspect them.
  std::size_t k = 0;
  for (const auto& r : params.refs()) {
    std::copy(analytic[k].begin(), analytic[k].end(), r.grad->data());
    ++k;
  }
  return max_rel;
}

}  // namespace tglm
