#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "tglm/error.hpp"
#include "tglm/numarray.hpp"

namespace tglm {

// Max-subtracted softmax over a 1-D array.
template <typename T>
NumArray<T> softmax(const NumArray<T>& v) {
  TGLM_CHECK_ARG(v.rank() == 1, "softmax: input must be 1-D");
  TGLM_CHECK_ARG(v.size() > 0, "softmax: empty input");
  if (!v.all_finite()) throw NumericError("softmax: non-finite input");
  NumArray<T> out(v.shape());
  const T m = v.vec().maxCoeff();
  double z = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const double e = std::exp(static_cast<double>(v[i] - m));
    out[i] = static_cast<T>(e);
    z += e;
  }
  for (std::int64_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(static_cast<double>(out[i]) / z);
  return out;
}

// In-place row-wise softmax on an Eigen map; the workhorse for logit blocks.
template <typename Derived>
void softmax_rows_inplace(Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const Scalar mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    row /= row.sum();
  }
}

// Shift-stable log(sum(exp(v))).
template <typename T>
double log_sum_exp(std::span<const T> v) {
  TGLM_CHECK_ARG(!v.empty(), "log_sum_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (const T& x : v) m = std::max(m, static_cast<double>(x));
  if (!std::isfinite(m)) throw NumericError("log_sum_exp: non-finite input");
  double s = 0.0;
  for (const T& x : v) s += std::exp(static_cast<double>(x) - m);
  return m + std::log(s);
}

template <typename T>
double log_sum_exp(const NumArray<T>& v) {
  TGLM_CHECK_ARG(v.rank() == 1, "log_sum_exp: input must be 1-D");
  return log_sum_exp(std::span<const T>(v.data(), static_cast<std::size_t>(v.size())));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) {
    const T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace tglm
