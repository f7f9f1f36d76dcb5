#include "tglm/lda.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "tglm/checkpoint.hpp"
#include "tglm/error.hpp"

namespace tglm {

LdaModel::LdaModel(LdaConfig cfg, std::int64_t tv_size)
    : cfg_(std::move(cfg)), tv_size_(tv_size) {
  TGLM_CHECK_ARG(cfg_.topics >= 1, "LdaModel: K must be >= 1");
  TGLM_CHECK_ARG(cfg_.alpha > 0.0 && cfg_.beta_hyper > 0.0,
                 "LdaModel: alpha and beta_hyper must be positive");
  topic_word_.assign(static_cast<std::size_t>(cfg_.topics),
                     std::vector<std::int64_t>(static_cast<std::size_t>(tv_size_), 0));
  topic_total_.assign(static_cast<std::size_t>(cfg_.topics), 0);
}

LdaModel LdaModel::gibbs_train(const std::vector<CountVector>& bows,
                               const LdaConfig& cfg, std::int64_t tv_size,
                               Rng& rng, const SweepHook& hook) {
  TGLM_CHECK_ARG(!bows.empty(), "gibbs_train: empty corpus");
  LdaModel model(cfg, tv_size);
  const std::int64_t k = cfg.topics;
  const double alpha_k = cfg.alpha_k();
  const double gamma = cfg.beta_hyper;
  const double v_gamma = gamma * static_cast<double>(tv_size);

  // Expand bags to flat token lists (counts are order-free).
  std::vector<std::int32_t> token_word;
  std::vector<std::int32_t> token_doc;
  std::int64_t n_docs = 0;
  for (const auto& bow : bows) {
    if (bow.total() == 0) {
      std::cerr << "gibbs_train: skipping zero-length document "
                << bow.doc_id << "\n";
      continue;
    }
    for (std::size_t w = 0; w < bow.counts.size(); ++w) {
      for (std::uint32_t c = 0; c < bow.counts[w]; ++c) {
        token_word.push_back(static_cast<std::int32_t>(w));
        token_doc.push_back(static_cast<std::int32_t>(n_docs));
      }
    }
    ++n_docs;
  }
  TGLM_CHECK_ARG(!token_word.empty(), "gibbs_train: no topic-vocab tokens");

  std::vector<std::vector<std::int64_t>> doc_topic(
      static_cast<std::size_t>(n_docs),
      std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
  std::vector<std::int32_t> z(token_word.size());

  Rng sampler = rng.stream("lda/gibbs");
  // Random initial assignments.
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = static_cast<std::int32_t>(sampler.uniform_index(k));
    ++doc_topic[static_cast<std::size_t>(token_doc[i])][static_cast<std::size_t>(z[i])];
    ++model.topic_word_[static_cast<std::size_t>(z[i])][static_cast<std::size_t>(token_word[i])];
    ++model.topic_total_[static_cast<std::size_t>(z[i])];
  }

  std::vector<double> cond(static_cast<std::size_t>(k));
  for (std::int64_t sweep = 0; sweep < cfg.iterations; ++sweep) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      const std::int32_t w = token_word[i];
      const std::int32_t d = token_doc[i];
      const std::int32_t old = z[i];
      --doc_topic[static_cast<std::size_t>(d)][static_cast<std::size_t>(old)];
      --model.topic_word_[static_cast<std::size_t>(old)][static_cast<std::size_t>(w)];
      --model.topic_total_[static_cast<std::size_t>(old)];

      double total = 0.0;
      for (std::int64_t t = 0; t < k; ++t) {
        const double p =
            (static_cast<double>(doc_topic[static_cast<std::size_t>(d)][static_cast<std::size_t>(t)]) + alpha_k) *
            (static_cast<double>(model.topic_word_[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)]) + gamma) /
            (static_cast<double>(model.topic_total_[static_cast<std::size_t>(t)]) + v_gamma);
        cond[static_cast<std::size_t>(t)] = p;
        total += p;
      }
      const double u = sampler.uniform() * total;
      double cum = 0.0;
      std::int32_t pick = static_cast<std::int32_t>(k) - 1;
      for (std::int64_t t = 0; t < k; ++t) {
        cum += cond[static_cast<std::size_t>(t)];
        if (u < cum) {
          pick = static_cast<std::int32_t>(t);
          break;
        }
      }
      z[i] = pick;
      ++doc_topic[static_cast<std::size_t>(d)][static_cast<std::size_t>(pick)];
      ++model.topic_word_[static_cast<std::size_t>(pick)][static_cast<std::size_t>(w)];
      ++model.topic_total_[static_cast<std::size_t>(pick)];
    }
    if (hook) hook(sweep, z);
  }
  model.recompute_beta_hat();
  return model;
}

void LdaModel::recompute_beta_hat() {
  const double gamma = cfg_.beta_hyper;
  const double v_gamma = gamma * static_cast<double>(tv_size_);
  beta_hat_.assign(static_cast<std::size_t>(cfg_.topics),
                   std::vector<double>(static_cast<std::size_t>(tv_size_), 0.0));
  for (std::int64_t t = 0; t < cfg_.topics; ++t) {
    const double denom = static_cast<double>(topic_total_[static_cast<std::size_t>(t)]) + v_gamma;
    for (std::int64_t w = 0; w < tv_size_; ++w) {
      beta_hat_[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)] =
          (static_cast<double>(topic_word_[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)]) + gamma) / denom;
    }
  }
}

std::vector<double> LdaModel::next_word(const CountVector& prefix_counts,
                                        Rng& rng) const {
  TGLM_CHECK_ARG(static_cast<std::int64_t>(prefix_counts.counts.size()) == tv_size_,
                 "next_word: prefix count length mismatch");
  const std::int64_t k = cfg_.topics;
  std::vector<double> out(static_cast<std::size_t>(tv_size_), 0.0);

  std::vector<std::int32_t> words;
  for (std::size_t w = 0; w < prefix_counts.counts.size(); ++w)
    for (std::uint32_t c = 0; c < prefix_counts.counts[w]; ++c)
      words.push_back(static_cast<std::int32_t>(w));

  const double alpha_k = cfg_.alpha_k();
  if (words.empty()) {
    // Prior mean over theta is uniform for the symmetric Dirichlet.
    for (std::int64_t t = 0; t < k; ++t)
      for (std::int64_t w = 0; w < tv_size_; ++w)
        out[static_cast<std::size_t>(w)] +=
            beta_hat_[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)] / static_cast<double>(k);
    return out;
  }

  Rng sampler = rng.stream("lda/predict");
  std::vector<std::int64_t> doc_topic(static_cast<std::size_t>(k), 0);
  std::vector<std::int32_t> z(words.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = static_cast<std::int32_t>(sampler.uniform_index(k));
    ++doc_topic[static_cast<std::size_t>(z[i])];
  }
  const double denom_theta =
      static_cast<double>(words.size()) + alpha_k * static_cast<double>(k);

  std::vector<double> cond(static_cast<std::size_t>(k));
  std::int64_t taken = 0;
  const std::int64_t total_sweeps =
      cfg_.predict_burnin + cfg_.predict_spacing * (cfg_.predict_samples - 1) + 1;
  for (std::int64_t sweep = 0; sweep < total_sweeps; ++sweep) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      const std::int32_t w = words[i];
      --doc_topic[static_cast<std::size_t>(z[i])];
      double total = 0.0;
      for (std::int64_t t = 0; t < k; ++t) {
        const double p = (static_cast<double>(doc_topic[static_cast<std::size_t>(t)]) + alpha_k) *
                         beta_hat_[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)];
        cond[static_cast<std::size_t>(t)] = p;
        total += p;
      }
      const double u = sampler.uniform() * total;
      double cum = 0.0;
      std::int32_t pick = static_cast<std::int32_t>(k) - 1;
      for (std::int64_t t = 0; t < k; ++t) {
        cum += cond[static_cast<std::size_t>(t)];
        if (u < cum) {
          pick = static_cast<std::int32_t>(t);
          break;
        }
      }
      z[i] = pick;
      ++doc_topic[static_cast<std::size_t>(pick)];
    }
    const bool is_sample =
        sweep >= cfg_.predict_burnin &&
        (sweep - cfg_.predict_burnin) % cfg_.predict_spacing == 0;
    if (is_sample && taken < cfg_.predict_samples) {
      for (std::int64_t t = 0; t < k; ++t) {
        const double theta_t =
            (static_cast<double>(doc_topic[static_cast<std::size_t>(t)]) + alpha_k) / denom_theta;
        for (std::int64_t w = 0; w < tv_size_; ++w)
          out[static_cast<std::size_t>(w)] +=
              theta_t * beta_hat_[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)];
      }
      ++taken;
    }
  }
  for (auto& v : out) v /= static_cast<double>(taken);
  return out;
}

std::vector<std::int32_t> LdaModel::top_words(std::int64_t topic,
                                              std::int64_t n) const {
  TGLM_CHECK_ARG(topic >= 0 && topic < cfg_.topics, "top_words: topic out of range");
  TGLM_CHECK_ARG(n <= tv_size_, "top_words: n exceeds topic vocabulary");
  std::vector<std::int32_t> idx(static_cast<std::size_t>(tv_size_));
  std::iota(idx.begin(), idx.end(), 0);
  const auto& row = beta_hat_[static_cast<std::size_t>(topic)];
  std::stable_sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
    if (row[static_cast<std::size_t>(a)] != row[static_cast<std::size_t>(b)])
      return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

void LdaModel::save(const std::string& path, const std::string& config_blob) const {
  CheckpointWriter w(path, ModelKind::kLda, config_blob);
  NumArray<double> counts({cfg_.topics, tv_size_});
  for (std::int64_t t = 0; t < cfg_.topics; ++t)
    for (std::int64_t v = 0; v < tv_size_; ++v)
      counts.at(t, v) = static_cast<double>(
          topic_word_[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)]);
  w.add("topic_word_counts", counts);
  NumArray<double> hyper({4});
  hyper[0] = static_cast<double>(cfg_.topics);
  hyper[1] = cfg_.alpha;
  hyper[2] = cfg_.beta_hyper;
  hyper[3] = cfg_.alpha_is_total ? 1.0 : 0.0;
  w.add("hyper", hyper);
  w.finish();
}

LdaModel LdaModel::load(const std::string& path, std::string* config_blob) {
  CheckpointReader r(path);
  TGLM_CHECK_CONTRACT(r.kind() == ModelKind::kLda,
                      "LdaModel::load: checkpoint is not an LDA model");
  if (config_blob) *config_blob = r.config_blob();
  const auto hyper = r.tensor<double>("hyper");
  const auto counts = r.tensor<double>("topic_word_counts");
  LdaConfig cfg;
  cfg.topics = static_cast<std::int64_t>(hyper[0]);
  cfg.alpha = hyper[1];
  cfg.beta_hyper = hyper[2];
  cfg.alpha_is_total = hyper[3] != 0.0;
  LdaModel model(cfg, counts.dim(1));
  for (std::int64_t t = 0; t < cfg.topics; ++t) {
    std::int64_t total = 0;
    for (std::int64_t v = 0; v < model.tv_size_; ++v) {
      const auto c = static_cast<std::int64_t>(counts.at(t, v));
      model.topic_word_[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)] = c;
      total += c;
    }
    model.topic_total_[static_cast<std::size_t>(t)] = total;
  }
  model.recompute_beta_hat();
  return model;
}

}  // namespace tglm
