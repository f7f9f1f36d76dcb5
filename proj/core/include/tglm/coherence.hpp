#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tglm/corpus.hpp"

namespace tglm {

// Window co-occurrence statistics over the topic vocabulary. Windows slide
// with stride 1 over the tv-filtered token stream of each document (never
// crossing document boundaries); a document shorter than the window size
// contributes a single window. Counting is boolean per window.
class CooccurrenceStats {
 public:
  CooccurrenceStats() = default;

  static CooccurrenceStats build(const std::vector<Document>& docs,
                                 const TopicVocab& tv, std::int64_t window = 10);

  std::int64_t window() const { return window_; }
  std::int64_t tv_size() const { return tv_size_; }
  std::uint64_t total_windows() const { return total_windows_; }

  std::uint64_t unigram_count(std::int32_t tv_index) const {
    return unigram_[static_cast<std::size_t>(tv_index)];
  }
  std::uint64_t pair_count(std::int32_t a, std::int32_t b) const;

  double p_word(std::int32_t tv_index) const {
    return static_cast<double>(unigram_count(tv_index)) /
           static_cast<double>(total_windows_);
  }
  double p_pair(std::int32_t a, std::int32_t b) const {
    return static_cast<double>(pair_count(a, b)) /
           static_cast<double>(total_windows_);
  }

  void save(const std::string& path) const;
  static CooccurrenceStats load(const std::string& path);

 private:
  static std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  std::int64_t window_ = 10;
  std::int64_t tv_size_ = 0;
  std::uint64_t total_windows_ = 0;
  std::vector<std::uint64_t> unigram_;
  std::unordered_map<std::uint64_t, std::uint64_t> pairs_;
};

// Eq.-(8)-style NPMI of one topic from its top words (tv indices). Pairs
// with zero joint count contribute -1 (the p(wi,wj) -> 0 limit).
double npmi_topic(const std::vector<std::int32_t>& top_words,
                  const CooccurrenceStats& stats);

// Mean over topics of the mean NPMI at N in {5, 10, 15, 20}. Each topic must
// supply at least 20 ranked words.
double model_coherence(const std::vector<std::vector<std::int32_t>>& topics,
                       const CooccurrenceStats& stats);

// Per-topic coherence at one N, exposed for reports.
double topic_coherence_at(const std::vector<std::int32_t>& ranked_words,
                          std::int64_t n, const CooccurrenceStats& stats);

}  // namespace tglm
