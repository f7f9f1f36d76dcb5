#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tglm/rng.hpp"

namespace tglm {

// Knobs for the bundled topical corpus generator. Documents draw sparse
// topic proportions, then emit words from topic-specific chains over
// disjoint content-word blocks, interleaved with high-frequency function
// words that later serve as the stop list.
struct SynthConfig {
  std::int64_t topics = 10;        // K
  std::int64_t vocab = 430;        // V = content + function types
  std::int64_t docs = 200;
  std::int64_t doc_len = 500;      // emitted tokens per document
  double topic_sharpness = 20.0;   // Dirichlet concentration = 1/sharpness
  int syntax_order = 2;            // 1 = unigram topics, 2 = bigram chains
  double function_word_rate = 0.35;
  std::int64_t function_words = 30;
  std::int64_t mean_sentence_len = 14;
  double train_frac = 0.8;
  double valid_frac = 0.1;
};

struct SynthStats {
  std::int64_t emitted_tokens = 0;
  std::vector<std::vector<double>> theta;           // per doc, K values
  std::vector<std::string> content_words;           // block-ordered
  std::vector<std::string> function_words;
  // Empirical per-topic emission counts over content words, training split.
  std::vector<std::vector<std::int64_t>> topic_word_counts;
};

// Writes train.txt / valid.txt / test.txt, per-split theta_*.tsv ground
// truth, stopwords.txt, and topic_word_counts.tsv into out_dir.
SynthStats generate_synthetic_corpus(const SynthConfig& cfg,
                                     const std::string& out_dir, Rng& rng);

}  // namespace tglm
