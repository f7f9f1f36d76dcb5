#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tglm/numarray.hpp"
#include "tglm/ops.hpp"
#include "tglm/params.hpp"
#include "tglm/rng.hpp"

namespace tglm {

// All layers cache their forward activations and expose a matching
// backward() that accumulates parameter gradients. A model instance is
// confined to one execution context, so the caches live on the layer.
//
// Batched windows use a time-major grid: row n = t * B + b.

template <typename T>
struct Embedding {
  NumArray<T> weight;  // V x E
  NumArray<T> grad;

  void init(std::int64_t vocab, std::int64_t embed, Rng& rng) {
    weight = NumArray<T>({vocab, embed});
    grad = NumArray<T>({vocab, embed});
    rng.fill_uniform(weight, -0.1, 0.1);
  }

  void register_params(ParamSet<T>& ps, const std::string& prefix) {
    ps.add(prefix + ".weight", &weight, &grad);
  }

  // ids: N entries, -1 rows come out zero (padding).
  void forward(const std::vector<std::int32_t>& ids, NumArray<T>& out) {
    const std::int64_t n = static_cast<std::int64_t>(ids.size());
    const std::int64_t e = weight.dim(1);
    if (out.size() != n * e) out = NumArray<T>({n, e});
    auto w = weight.mat();
    auto o = out.mat(n, e);
    for (std::int64_t i = 0; i < n; ++i) {
      if (ids[static_cast<std::size_t>(i)] < 0)
        o.row(i).setZero();
      else
        o.row(i) = w.row(ids[static_cast<std::size_t>(i)]);
    }
    last_ids_ = &ids;
  }

  void backward(const NumArray<T>& d_out) {
    const auto& ids = *last_ids_;
    const std::int64_t n = static_cast<std::int64_t>(ids.size());
    const std::int64_t e = weight.dim(1);
    auto g = grad.mat();
    auto d = d_out.mat(n, e);
    for (std::int64_t i = 0; i < n; ++i) {
      if (ids[static_cast<std::size_t>(i)] >= 0)
        g.row(ids[static_cast<std::size_t>(i)]) += d.row(i);
    }
  }

 private:
  const std::vector<std::int32_t>* last_ids_ = nullptr;
};

template <typename T>
struct Dropout {
  double rate = 0.0;

  // In train mode multiplies by a Bernoulli(1-rate)/(1-rate) mask drawn from
  // rng; in eval mode it is the identity.
  void forward(NumArray<T>& x, bool train, Rng* rng) {
    if (!train || rate <= 0.0) {
      active_ = false;
      return;
    }
    active_ = true;
    if (mask_.size() != x.size()) mask_ = NumArray<T>(x.shape());
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const T m = rng->uniform() < rate ? T(0) : scale;
      mask_[i] = m;
      x[i] *= m;
    }
  }

  void backward(NumArray<T>& d_x) const {
    if (!active_) return;
    for (std::int64_t i = 0; i < d_x.size(); ++i) d_x[i] *= mask_[i];
  }

 private:
  NumArray<T> mask_;
  bool active_ = false;
};

// Fully-connected layer, y = x W^T + b.
template <typename T>
struct Linear {
  NumArray<T> weight;  // out x in
  NumArray<T> bias;    // out
  NumArray<T> w_grad;
  NumArray<T> b_grad;
  bool has_bias = true;

  void init(std::int64_t in, std::int64_t out, Rng& rng, bool with_bias = true) {
    has_bias = with_bias;
    weight = NumArray<T>({out, in});
    w_grad = NumArray<T>({out, in});
    rng.fill_uniform(weight, -0.1, 0.1);
    if (has_bias) {
      bias = NumArray<T>({out});
      b_grad = NumArray<T>({out});
    }
  }

  void register_params(ParamSet<T>& ps, const std::string& prefix) {
    ps.add(prefix + ".weight", &weight, &w_grad);
    if (has_bias) ps.add(prefix + ".bias", &bias, &b_grad);
  }

  void forward(const NumArray<T>& x, NumArray<T>& y) {
    const std::int64_t n = x.size() / weight.dim(1);
    if (y.size() != n * weight.dim(0)) y = NumArray<T>({n, weight.dim(0)});
    y.mat(n, weight.dim(0)).noalias() =
        x.mat(n, weight.dim(1)) * weight.mat().transpose();
    if (has_bias)
      y.mat(n, weight.dim(0)).rowwise() += bias.vec().transpose();
    x_cache_ = &x;
  }

  void backward(const NumArray<T>& d_y, NumArray<T>& d_x) {
    const std::int64_t n = d_y.size() / weight.dim(0);
    auto dy = d_y.mat(n, weight.dim(0));
    w_grad.mat().noalias() += dy.transpose() * x_cache_->mat(n, weight.dim(1));
    if (has_bias) b_grad.vec().noalias() += dy.colwise().sum().transpose();
    if (d_x.size() != n * weight.dim(1)) d_x = NumArray<T>({n, weight.dim(1)});
    d_x.mat(n, weight.dim(1)).noalias() = dy * weight.mat();
  }

 private:
  const NumArray<T>* x_cache_ = nullptr;
};

struct LstmGateNames {
  static constexpr const char* kGates[4] = {"i", "f", "o", "c"};
};

// LSTM parameters, one weight set per gate (input, forget, output, cell).
template <typename T>
struct LstmParams {
  NumArray<T> w[4];  // D x D_in
  NumArray<T> u[4];  // D x D
  NumArray<T> b[4];  // D
  NumArray<T> w_grad[4], u_grad[4], b_grad[4];
  std::int64_t input_dim = 0;
  std::int64_t hidden_dim = 0;

  void init(std::int64_t in, std::int64_t hidden, Rng& rng) {
    input_dim = in;
    hidden_dim = hidden;
    for (int g = 0; g < 4; ++g) {
      w[g] = NumArray<T>({hidden, in});
      u[g] = NumArray<T>({hidden, hidden});
      b[g] = NumArray<T>({hidden});
      w_grad[g] = NumArray<T>({hidden, in});
      u_grad[g] = NumArray<T>({hidden, hidden});
      b_grad[g] = NumArray<T>({hidden});
      rng.fill_uniform(w[g], -0.1, 0.1);
      rng.fill_uniform(u[g], -0.1, 0.1);
    }
    // Forget-gate bias starts at +1 to stabilize early training.
    b[1].vec().setConstant(T(1));
  }

  void register_params(ParamSet<T>& ps, const std::string& prefix) {
    for (int g = 0; g < 4; ++g) {
      const std::string s = LstmGateNames::kGates[g];
      ps.add(prefix + ".W_" + s, &w[g], &w_grad[g]);
      ps.add(prefix + ".U_" + s, &u[g], &u_grad[g]);
      ps.add(prefix + ".b_" + s, &b[g], &b_grad[g]);
    }
  }

  std::int64_t param_count() const {
    return 4 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim);
  }
};

// Single LSTM step on a row batch: c' = f (.) c + i (.) c_hat,
// h' = o (.) tanh(c').
template <typename T>
struct LstmStepCache {
  NumArray<T> gate[4];  // i, f, o, c_hat
  NumArray<T> c_prev, h_prev, c, tanh_c;
  std::vector<std::uint8_t> active;  // per-row update mask
};

template <typename T>
void lstm_step_forward(const LstmParams<T>& p, const T* x_data, std::int64_t n,
                       const NumArray<T>& h_prev, const NumArray<T>& c_prev,
                       const std::vector<std::uint8_t>& active,
                       NumArray<T>& h_out, NumArray<T>& c_out,
                       LstmStepCache<T>& cache) {
  const std::int64_t d = p.hidden_dim;
  typename NumArray<T>::ConstMatrixMap x(x_data, n, p.input_dim);
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.active = active;
  for (int g = 0; g < 4; ++g) {
    cache.gate[g] = NumArray<T>({n, d});
    auto a = cache.gate[g].mat();
    a.noalias() = x * p.w[g].mat().transpose();
    a.noalias() += h_prev.mat(n, d) * p.u[g].mat().transpose();
    a.rowwise() += p.b[g].vec().transpose();
    if (g == 3)
      a = a.array().tanh();
    else
      a = a.unaryExpr([](T v) { return sigmoid(v); });
  }
  if (h_out.size() != n * d) h_out = NumArray<T>({n, d});
  if (c_out.size() != n * d) c_out = NumArray<T>({n, d});
  cache.c = NumArray<T>({n, d});
  cache.tanh_c = NumArray<T>({n, d});
  auto i = cache.gate[0].mat(), f = cache.gate[1].mat(), o = cache.gate[2].mat(),
       ch = cache.gate[3].mat();
  cache.c.mat().array() =
      f.array() * cache.c_prev.mat(n, d).array() + i.array() * ch.array();
  cache.tanh_c.mat().array() = cache.c.mat().array().tanh();
  // h_out/c_out may alias h_prev/c_prev (in-place state update); everything
  // below reads only the cached copies.
  h_out.mat(n, d).array() = o.array() * cache.tanh_c.mat().array();
  c_out.mat(n, d) = cache.c.mat();
  for (std::int64_t r = 0; r < n; ++r) {
    if (!active[static_cast<std::size_t>(r)]) {
      h_out.mat(n, d).row(r) = cache.h_prev.mat(n, d).row(r);
      c_out.mat(n, d).row(r) = cache.c_prev.mat(n, d).row(r);
    }
  }
}

// Backward through one step. d_h/d_c carry gradients w.r.t. this step's
// outputs and are replaced by gradients w.r.t. the previous state.
// d_x accumulates the input gradient.
template <typename T>
void lstm_step_backward(LstmParams<T>& p, const T* x_data,
                        const LstmStepCache<T>& cache, NumArray<T>& d_h,
                        NumArray<T>& d_c, T* d_x_data) {
  const std::int64_t n = d_h.size() / p.hidden_dim;
  const std::int64_t d = p.hidden_dim;
  typename NumArray<T>::ConstMatrixMap x(x_data, n, p.input_dim);
  typename NumArray<T>::MatrixMap d_x(d_x_data, n, p.input_dim);
  auto i = cache.gate[0].mat(), f = cache.gate[1].mat(), o = cache.gate[2].mat(),
       ch = cache.gate[3].mat();

  // Zero the step contribution on inactive rows; their state gradient
  // passes through unchanged.
  NumArray<T> dh_step({n, d}), dc_step({n, d});
  dh_step.mat() = d_h.mat(n, d);
  dc_step.mat() = d_c.mat(n, d);
  for (std::int64_t r = 0; r < n; ++r) {
    if (!cache.active[static_cast<std::size_t>(r)]) {
      dh_step.mat().row(r).setZero();
      dc_step.mat().row(r).setZero();
    } else {
      d_h.mat(n, d).row(r).setZero();
      d_c.mat(n, d).row(r).setZero();
    }
  }

  NumArray<T> da[4];
  for (int g = 0; g < 4; ++g) da[g] = NumArray<T>({n, d});

  // dL/dc_t = dh (.) o (.) (1 - tanh^2 c) + carried dc
  NumArray<T> dct({n, d});
  dct.mat().array() =
      dh_step.mat().array() * o.array() *
          (T(1) - cache.tanh_c.mat().array() * cache.tanh_c.mat().array()) +
      dc_step.mat().array();

  da[2].mat().array() = dh_step.mat().array() * cache.tanh_c.mat().array() *
                        o.array() * (T(1) - o.array());
  da[1].mat().array() = dct.mat().array() * cache.c_prev.mat(n, d).array() *
                        f.array() * (T(1) - f.array());
  da[0].mat().array() =
      dct.mat().array() * ch.array() * i.array() * (T(1) - i.array());
  da[3].mat().array() =
      dct.mat().array() * i.array() * (T(1) - ch.array() * ch.array());

  for (int g = 0; g < 4; ++g) {
    p.w_grad[g].mat().noalias() += da[g].mat().transpose() * x;
    p.u_grad[g].mat().noalias() +=
        da[g].mat().transpose() * cache.h_prev.mat(n, d);
    p.b_grad[g].vec().noalias() += da[g].mat().colwise().sum().transpose();
    d_x.noalias() += da[g].mat() * p.w[g].mat();
    d_h.mat(n, d).noalias() += da[g].mat() * p.u[g].mat();
  }
  // dL/dc_{t-1} = dct (.) f (+ pass-through already in d_c for inactive rows)
  d_c.mat(n, d).array() += dct.mat().array() * f.array();
}

// GRU parameters (update z, reset r, candidate h).
template <typename T>
struct GruParams {
  NumArray<T> w[3];  // D x D_in
  NumArray<T> u[3];  // D x D
  NumArray<T> b[3];  // D
  NumArray<T> w_grad[3], u_grad[3], b_grad[3];
  std::int64_t input_dim = 0;
  std::int64_t hidden_dim = 0;

  void init(std::int64_t in, std::int64_t hidden, Rng& rng) {
    input_dim = in;
    hidden_dim = hidden;
    static constexpr const char* kNames[3] = {"z", "r", "h"};
    (void)kNames;
    for (int g = 0; g < 3; ++g) {
      w[g] = NumArray<T>({hidden, in});
      u[g] = NumArray<T>({hidden, hidden});
      b[g] = NumArray<T>({hidden});
      w_grad[g] = NumArray<T>({hidden, in});
      u_grad[g] = NumArray<T>({hidden, hidden});
      b_grad[g] = NumArray<T>({hidden});
      rng.fill_uniform(w[g], -0.1, 0.1);
      rng.fill_uniform(u[g], -0.1, 0.1);
    }
  }

  void register_params(ParamSet<T>& ps, const std::string& prefix) {
    static constexpr const char* kNames[3] = {"z", "r", "h"};
    for (int g = 0; g < 3; ++g) {
      ps.add(prefix + ".W_" + kNames[g], &w[g], &w_grad[g]);
      ps.add(prefix + ".U_" + kNames[g], &u[g], &u_grad[g]);
      ps.add(prefix + ".b_" + kNames[g], &b[g], &b_grad[g]);
    }
  }

  std::int64_t param_count() const {
    return 3 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim);
  }
};

template <typename T>
struct GruCache {
  NumArray<T> x, h, z, r, h_hat, rh;
};

// h' = (1 - z) (.) h + z (.) h_hat, with h_hat = tanh(W_h x + U_h (r (.) h) + b_h).
template <typename T>
void gru_forward(const GruParams<T>& p, const NumArray<T>& x,
                 const NumArray<T>& h, NumArray<T>& out, GruCache<T>& cache) {
  const std::int64_t n = h.size() / p.hidden_dim;
  const std::int64_t d = p.hidden_dim;
  cache.x = x;
  cache.h = h;
  auto gate_pre = [&](int g, const NumArray<T>& hin, NumArray<T>& dst) {
    dst = NumArray<T>({n, d});
    auto a = dst.mat();
    if (p.input_dim > 0)
      a.noalias() = x.mat(n, p.input_dim) * p.w[g].mat().transpose();
    else
      a.setZero();
    a.noalias() += hin.mat(n, d) * p.u[g].mat().transpose();
    a.rowwise() += p.b[g].vec().transpose();
  };
  gate_pre(0, h, cache.z);
  cache.z.mat() = cache.z.mat().unaryExpr([](T v) { return sigmoid(v); });
  gate_pre(1, h, cache.r);
  cache.r.mat() = cache.r.mat().unaryExpr([](T v) { return sigmoid(v); });
  cache.rh = NumArray<T>({n, d});
  cache.rh.mat().array() = cache.r.mat().array() * h.mat(n, d).array();
  gate_pre(2, cache.rh, cache.h_hat);
  cache.h_hat.mat() = cache.h_hat.mat().array().tanh();
  if (out.size() != n * d) out = NumArray<T>({n, d});
  out.mat(n, d).array() =
      (T(1) - cache.z.mat().array()) * h.mat(n, d).array() +
      cache.z.mat().array() * cache.h_hat.mat().array();
}

// Returns gradients w.r.t. x (accumulated into d_x when input_dim > 0) and
// h (accumulated into d_h).
template <typename T>
void gru_backward(GruParams<T>& p, const GruCache<T>& cache,
                  const NumArray<T>& d_out, NumArray<T>& d_x, NumArray<T>& d_h) {
  const std::int64_t d = p.hidden_dim;
  const std::int64_t n = d_out.size() / d;
  auto z = cache.z.mat(), r = cache.r.mat(), hh = cache.h_hat.mat(),
       h = cache.h.mat(n, d);

  NumArray<T> da_z({n, d}), da_r({n, d}), da_h({n, d});
  // dz = dg (.) (h_hat - h)
  da_z.mat().array() = d_out.mat(n, d).array() * (hh.array() - h.array()) *
                       z.array() * (T(1) - z.array());
  // dh_hat = dg (.) z
  da_h.mat().array() = d_out.mat(n, d).array() * z.array() *
                       (T(1) - hh.array() * hh.array());
  // direct path h' <- (1-z) h
  d_h.mat(n, d).array() += d_out.mat(n, d).array() * (T(1) - z.array());

  // through the candidate's recurrent term U_h (r (.) h)
  NumArray<T> d_rh({n, d});
  d_rh.mat().noalias() = da_h.mat() * p.u[2].mat();
  da_r.mat().array() = d_rh.mat().array() * h.array() * r.array() * (T(1) - r.array());
  d_h.mat(n, d).array() += d_rh.mat().array() * r.array();

  d_h.mat(n, d).noalias() += da_z.mat() * p.u[0].mat();
  d_h.mat(n, d).noalias() += da_r.mat() * p.u[1].mat();

  NumArray<T>* das[3] = {&da_z, &da_r, &da_h};
  const NumArray<T>* hins[3] = {&cache.h, &cache.h, &cache.rh};
  for (int g = 0; g < 3; ++g) {
    if (p.input_dim > 0) {
      p.w_grad[g].mat().noalias() +=
          das[g]->mat().transpose() * cache.x.mat(n, p.input_dim);
      d_x.mat(n, p.input_dim).noalias() += das[g]->mat() * p.w[g].mat();
    }
    p.u_grad[g].mat().noalias() +=
        das[g]->mat().transpose() * hins[g]->mat(n, d);
    p.b_grad[g].vec().noalias() += das[g]->mat().colwise().sum().transpose();
  }
}

}  // namespace tglm
