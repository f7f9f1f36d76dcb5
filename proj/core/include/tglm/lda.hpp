#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tglm/corpus.hpp"
#include "tglm/rng.hpp"

namespace tglm {

struct LdaConfig {
  std::int64_t topics = 10;        // K
  double alpha = 50.0;             // document-topic concentration
  bool alpha_is_total = true;      // Mallet convention: per-topic mass alpha/K
  double beta_hyper = 0.01;        // symmetric topic-word concentration
  std::int64_t iterations = 1000;  // training sweeps
  std::int64_t predict_samples = 10;
  std::int64_t predict_burnin = 50;
  std::int64_t predict_spacing = 5;

  double alpha_k() const { return alpha_is_total ? alpha / static_cast<double>(topics) : alpha; }
};

// Collapsed-Gibbs LDA over bag-of-words documents. Counts are kept over the
// topic vocabulary; beta_hat rows are the gamma-smoothed topic-word
// distributions frozen at the final sweep.
class LdaModel {
 public:
  LdaModel() = default;
  LdaModel(LdaConfig cfg, std::int64_t tv_size);

  // Called after every full sweep with the flat token-level assignments.
  using SweepHook =
      std::function<void(std::int64_t sweep, const std::vector<std::int32_t>& z)>;

  // Collapsed Gibbs over token-level topic indicators. Zero-length
  // documents are skipped with a warning on stderr.
  static LdaModel gibbs_train(const std::vector<CountVector>& bows,
                              const LdaConfig& cfg, std::int64_t tv_size,
                              Rng& rng, const SweepHook& hook = nullptr);

  // Eq.-style posterior predictive: short Gibbs on the prefix counts with
  // frozen beta_hat, averaging sum_k theta_k beta_hat_k over spaced samples.
  // An empty prefix returns the prior-mean mixture sum_k beta_hat_k / K.
  std::vector<double> next_word(const CountVector& prefix_counts, Rng& rng) const;

  // n highest-probability words of topic k, ties broken by ascending index.
  std::vector<std::int32_t> top_words(std::int64_t topic, std::int64_t n) const;

  const std::vector<std::vector<double>>& beta_hat() const { return beta_hat_; }
  const std::vector<std::vector<std::int64_t>>& topic_word_counts() const {
    return topic_word_;
  }
  const LdaConfig& config() const { return cfg_; }
  std::int64_t tv_size() const { return tv_size_; }
  std::int64_t topics() const { return cfg_.topics; }

  void save(const std::string& path, const std::string& config_blob) const;
  static LdaModel load(const std::string& path, std::string* config_blob = nullptr);

 private:
  void recompute_beta_hat();

  LdaConfig cfg_;
  std::int64_t tv_size_ = 0;
  std::vector<std::vector<std::int64_t>> topic_word_;  // K x |tv|
  std::vector<std::int64_t> topic_total_;              // K
  std::vector<std::vector<double>> beta_hat_;          // K x |tv|, simplex rows
};

}  // namespace tglm
