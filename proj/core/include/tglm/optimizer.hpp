#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tglm/error.hpp"
#include "tglm/params.hpp"

namespace tglm {

enum class OptimizerKind { kAdam, kSgdDecay };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 0.001;          // Adam
  double sgd_lr0 = 20.0;      // sgd_decay initial rate
  double sgd_divisor = 4.0;   // applied on non-improving validation epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;     // global gradient norm
};

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, const ParamSet<T>& params) : cfg_(cfg) {
    lr_ = cfg_.kind == OptimizerKind::kAdam ? cfg_.lr : cfg_.sgd_lr0;
    if (cfg_.kind == OptimizerKind::kAdam) {
      for (const auto& r : params.refs()) {
        m_.emplace_back(r.value->shape());
        v_.emplace_back(r.value->shape());
      }
    }
  }

  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }

  // Divides the SGD rate when this epoch's validation perplexity is worse
  // than the previous epoch's. Adam ignores the signal.
  void on_validation(double val_ppl) {
    if (cfg_.kind == OptimizerKind::kSgdDecay && has_prev_ &&
        val_ppl > prev_val_) {
      lr_ /= cfg_.sgd_divisor;
    }
    prev_val_ = val_ppl;
    has_prev_ = true;
  }

  void step(ParamSet<T>& params) {
    for (const auto& r : params.refs()) {
      if (!r.grad->all_finite())
        throw TrainingError("optimizer: non-finite gradient in " + r.name);
    }
    params.clip_grad_norm(cfg_.clip_norm);
    ++t_;
    if (cfg_.kind == OptimizerKind::kSgdDecay) {
      const T lr = static_cast<T>(lr_);
      for (auto& r : params.refs()) r.value->vec() -= lr * r.grad->vec();
      return;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double alpha = lr_ * std::sqrt(bc2) / bc1;
    std::size_t i = 0;
    for (auto& r : params.refs()) {
      auto m = m_[i].vec();
      auto v = v_[i].vec();
      auto g = r.grad->vec();
      m.array() = static_cast<T>(cfg_.beta1) * m.array() +
                  static_cast<T>(1.0 - cfg_.beta1) * g.array();
      v.array() = static_cast<T>(cfg_.beta2) * v.array() +
                  static_cast<T>(1.0 - cfg_.beta2) * g.array().square();
      r.value->vec().array() -=
          static_cast<T>(alpha) * m.array() /
          (v.array().sqrt() + static_cast<T>(cfg_.eps));
      ++i;
    }
  }

  // Moment tensors, exposed for checkpoint/resume.
  std::vector<NumArray<T>>& adam_m() { return m_; }
  std::vector<NumArray<T>>& adam_v() { return v_; }
  void restore_schedule(double lr, std::int64_t steps, double prev_val,
                        bool has_prev) {
    lr_ = lr;
    t_ = steps;
    prev_val_ = prev_val;
    has_prev_ = has_prev;
  }
  double prev_validation() const { return prev_val_; }
  bool has_prev_validation() const { return has_prev_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  double lr_ = 0.0;
  std::int64_t t_ = 0;
  double prev_val_ = 0.0;
  bool has_prev_ = false;
  std::vector<NumArray<T>> m_, v_;
};

}  // namespace tglm
