#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tglm/numarray.hpp"

namespace tglm {

// One named trainable tensor together with its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  NumArray<T>* value = nullptr;
  NumArray<T>* grad = nullptr;
};

// Flat registry over a model's parameters. Optimizers, checkpoints, and the
// finite-difference oracle all walk this list; insertion order is the
// serialization order.
template <typename T>
class ParamSet {
 public:
  void add(std::string name, NumArray<T>* value, NumArray<T>* grad) {
    refs_.push_back(ParamRef<T>{std::move(name), value, grad});
  }

  void merge(const ParamSet<T>& other) {
    for (const auto& r : other.refs_) refs_.push_back(r);
  }

  const std::vector<ParamRef<T>>& refs() const { return refs_; }
  std::size_t count() const { return refs_.size(); }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& r : refs_) n += r.value->size();
    return n;
  }

  void zero_grads() {
    for (auto& r : refs_) r.grad->set_zero();
  }

  double grad_norm() const {
    double s = 0.0;
    for (const auto& r : refs_)
      for (std::int64_t i = 0; i < r.grad->size(); ++i)
        s += static_cast<double>((*r.grad)[i]) * static_cast<double>((*r.grad)[i]);
    return std::sqrt(s);
  }

  // Scales all gradients so the global norm does not exceed max_norm.
  void clip_grad_norm(double max_norm) {
    const double n = grad_norm();
    if (n > max_norm && n > 0.0) {
      const T s = static_cast<T>(max_norm / n);
      for (auto& r : refs_) r.grad->vec() *= s;
    }
  }

 private:
  std::vector<ParamRef<T>> refs_;
};

}  // namespace tglm
