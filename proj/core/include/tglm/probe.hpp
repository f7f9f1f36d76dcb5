#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tglm/rng.hpp"

namespace tglm {

// One probing pair: the language model's hidden state at a chunk start and
// the inverse-softmax-transformed topic target estimated from the same
// prefix.
struct ProbeExample {
  std::int32_t doc_id = 0;
  std::int32_t offset = 0;           // chunk start, document token coords
  std::vector<float> hidden;         // D
  std::vector<float> theta_tilde;    // K
};

struct ProbeDataset {
  std::vector<ProbeExample> train;
  std::vector<ProbeExample> heldout;

  std::int64_t hidden_dim() const {
    return train.empty() ? 0 : static_cast<std::int64_t>(train[0].hidden.size());
  }
  std::int64_t target_dim() const {
    return train.empty() ? 0
                         : static_cast<std::int64_t>(train[0].theta_tilde.size());
  }
};

// theta_tilde = log(theta) - sum_j log(theta_j), entries clamped at 1e-10
// before the log. softmax(theta_tilde) recovers theta.
std::vector<double> inverse_softmax(const std::vector<double>& theta);

struct LinearProbe {
  std::vector<std::vector<double>> weight;  // K x D
  std::vector<double> bias;                 // K

  std::vector<double> predict(const std::vector<float>& h) const;
};

enum class ProbeSolver { kClosedFormRidge, kGradientDescent };

struct ProbeTrainOptions {
  ProbeSolver solver = ProbeSolver::kClosedFormRidge;
  double ridge_lambda = 1e-4;
  double gd_tolerance = 1e-6;
  std::int64_t gd_max_iters = 20000;
};

// Minimizes sum over examples of sum_k (y_hat_k - theta_tilde_k)^2. The
// closed-form route solves the ridge normal equations; the gradient-descent
// route iterates to tolerance. Both must agree on held-out MSE.
LinearProbe train_probe(const std::vector<ProbeExample>& examples,
                        const ProbeTrainOptions& opt = {});

double probe_mse(const LinearProbe& probe, const std::vector<ProbeExample>& data);

struct ProbeMetrics {
  double acc1 = 0.0;
  double acc5 = 0.0;
  double r2 = 0.0;
};

// acc1: predictor argmax matches target argmax; acc5: target argmax within
// the predictor's top five components; r2 pooled over all components against
// the held-out component-wise mean. Argmax ties break to the lowest index.
ProbeMetrics probe_metrics(const LinearProbe& probe,
                           const std::vector<ProbeExample>& heldout);

// Binary records: doc_id u32, offset u32, D f32s, K f32s (little-endian).
void save_probe_examples(const std::string& path,
                         const std::vector<ProbeExample>& examples,
                         std::int64_t hidden_dim, std::int64_t target_dim);
std::vector<ProbeExample> load_probe_examples(const std::string& path,
                                              std::int64_t hidden_dim,
                                              std::int64_t target_dim);

// Document-level train/heldout split (no chunk of one document crosses the
// split boundary).
ProbeDataset split_probe_examples(std::vector<ProbeExample> examples,
                                  double heldout_frac, Rng& rng);

}  // namespace tglm
