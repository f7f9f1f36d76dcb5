#include "tglm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "tglm/error.hpp"
#include "tglm/ops.hpp"

namespace tglm {

namespace {

// log Gamma(shape) draw, stable for tiny shapes: for shape < 1 uses
// boost log X = log Gamma(shape+1) + (1/shape) log U.
double log_gamma_draw(double shape, Rng& rng) {
  if (shape < 1.0) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return log_gamma_draw(shape + 1.0, rng) + std::log(u) / shape;
  }
  // Marsaglia-Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
    if (u > 0.0 &&
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return std::log(d * v);
  }
}

std::vector<double> dirichlet_draw(std::int64_t k, double alpha, Rng& rng) {
  std::vector<double> logs(static_cast<std::size_t>(k));
  for (auto& v : logs) v = log_gamma_draw(alpha, rng);
  const double m = *std::max_element(logs.begin(), logs.end());
  double z = 0.0;
  for (auto& v : logs) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : logs) v /= z;
  return logs;
}

// Zipf-shaped distribution over n items.
std::vector<double> zipf(std::int64_t n, double offset) {
  std::vector<double> p(static_cast<std::size_t>(n));
  double z = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = 1.0 / (static_cast<double>(i) + offset);
    z += p[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace

SynthStats generate_synthetic_corpus(const SynthConfig& cfg,
                                     const std::string& out_dir, Rng& rng) {
  TGLM_CHECK_ARG(cfg.topics >= 2, "generate_synthetic_corpus: K must be >= 2");
  TGLM_CHECK_ARG(cfg.vocab >= 3 * cfg.topics,
                 "generate_synthetic_corpus: V must be >= 3K");
  TGLM_CHECK_ARG(cfg.docs > 0 && cfg.doc_len > 0,
                 "generate_synthetic_corpus: docs and doc_len must be positive");
  TGLM_CHECK_ARG(cfg.syntax_order == 1 || cfg.syntax_order == 2,
                 "generate_synthetic_corpus: syntax_order must be 1 or 2");
  TGLM_CHECK_ARG(cfg.function_word_rate >= 0.0 && cfg.function_word_rate < 1.0,
                 "generate_synthetic_corpus: function_word_rate out of [0,1)");
  TGLM_CHECK_ARG(cfg.function_words < cfg.vocab - 2 * cfg.topics,
                 "generate_synthetic_corpus: too many function words");

  std::filesystem::create_directories(out_dir);

  const std::int64_t k = cfg.topics;
  const std::int64_t n_func = cfg.function_words;
  const std::int64_t n_content = cfg.vocab - n_func;
  const std::int64_t block = n_content / k;

  SynthStats stats;
  for (std::int64_t i = 0; i < n_func; ++i)
    stats.function_words.push_back("fw" + std::to_string(i));
  for (std::int64_t t = 0; t < k; ++t)
    for (std::int64_t i = 0; i < block; ++i)
      stats.content_words.push_back("t" + std::to_string(t) + "w" +
                                    std::to_string(i));
  stats.topic_word_counts.assign(
      static_cast<std::size_t>(k),
      std::vector<std::int64_t>(stats.content_words.size(), 0));

  const auto func_dist = zipf(n_func, 2.0);
  const auto word_dist = zipf(block, 3.0);  // base within-block preference
  const double alpha = 1.0 / cfg.topic_sharpness;

  Rng theta_rng = rng.stream("synth/theta");
  Rng emit_rng = rng.stream("synth/emit");
  Rng sent_rng = rng.stream("synth/sentences");

  const std::int64_t n_train =
      static_cast<std::int64_t>(std::llround(cfg.train_frac * static_cast<double>(cfg.docs)));
  const std::int64_t n_valid =
      static_cast<std::int64_t>(std::llround(cfg.valid_frac * static_cast<double>(cfg.docs)));

  struct SplitFiles {
    std::ofstream text;
    std::ofstream theta;
  };
  auto open_split = [&](const std::string& name) {
    SplitFiles f;
    f.text.open(out_dir + "/" + name + ".txt", std::ios::binary);
    f.theta.open(out_dir + "/theta_" + name + ".tsv", std::ios::binary);
    if (!f.text || !f.theta)
      throw IoError("generate_synthetic_corpus: cannot write into " + out_dir);
    return f;
  };
  SplitFiles train = open_split("train");
  SplitFiles valid = open_split("valid");
  SplitFiles test = open_split("test");

  for (std::int64_t d = 0; d < cfg.docs; ++d) {
    const bool in_train = d < n_train;
    SplitFiles& split =
        in_train ? train : (d < n_train + n_valid ? valid : test);

    const auto theta = dirichlet_draw(k, alpha, theta_rng);
    stats.theta.push_back(theta);

    // Per-topic chain state for the bigram order.
    std::vector<std::int64_t> chain_pos(static_cast<std::size_t>(k), -1);
    std::int64_t next_break =
        cfg.mean_sentence_len / 2 +
        sent_rng.uniform_index(cfg.mean_sentence_len);

    std::string line;
    for (std::int64_t t = 0; t < cfg.doc_len; ++t) {
      if (t == next_break && t + 1 < cfg.doc_len) {
        line += "</s> ";
        next_break = t + cfg.mean_sentence_len / 2 +
                     sent_rng.uniform_index(cfg.mean_sentence_len);
      }
      if (emit_rng.uniform() < cfg.function_word_rate) {
        const std::int64_t f = sample_categorical(
            std::span<const double>(func_dist.data(), func_dist.size()),
            emit_rng);
        line += stats.function_words[static_cast<std::size_t>(f)];
      } else {
        const std::int64_t z = sample_categorical(
            std::span<const double>(theta.data(), theta.size()), emit_rng);
        std::int64_t w;
        if (cfg.syntax_order == 2 && chain_pos[static_cast<std::size_t>(z)] >= 0) {
          // Bigram chain: half the mass follows the block's base
          // distribution, half hops to a near neighbor of the previous word.
          if (emit_rng.uniform() < 0.5) {
            w = sample_categorical(
                std::span<const double>(word_dist.data(), word_dist.size()),
                emit_rng);
          } else {
            const std::int64_t hop = 1 + emit_rng.uniform_index(3);
            w = (chain_pos[static_cast<std::size_t>(z)] + hop) % block;
          }
        } else {
          w = sample_categorical(
              std::span<const double>(word_dist.data(), word_dist.size()),
              emit_rng);
        }
        chain_pos[static_cast<std::size_t>(z)] = w;
        const std::int64_t content_index = z * block + w;
        line += stats.content_words[static_cast<std::size_t>(content_index)];
        if (in_train)
          ++stats.topic_word_counts[static_cast<std::size_t>(z)]
                                   [static_cast<std::size_t>(content_index)];
      }
      line += ' ';
      ++stats.emitted_tokens;
    }
    if (!line.empty() && line.back() == ' ') line.pop_back();
    split.text << line << '\n';

    char buf[32];
    for (std::int64_t j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, "%.8f", theta[static_cast<std::size_t>(j)]);
      split.theta << buf << (j + 1 == k ? '\n' : '\t');
    }
  }

  std::ofstream stops(out_dir + "/stopwords.txt", std::ios::binary);
  for (const auto& w : stats.function_words) stops << w << '\n';

  std::ofstream truth(out_dir + "/topic_word_counts.tsv", std::ios::binary);
  for (std::size_t w = 0; w < stats.content_words.size(); ++w) {
    truth << stats.content_words[w];
    for (std::int64_t t = 0; t < k; ++t)
      truth << '\t' << stats.topic_word_counts[static_cast<std::size_t>(t)][w];
    truth << '\n';
  }
  if (!stops || !truth)
    throw IoError("generate_synthetic_corpus: cannot write into " + out_dir);
  return stats;
}

}  // namespace tglm
