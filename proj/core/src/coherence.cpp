#include "tglm/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tglm/error.hpp"

namespace tglm {

CooccurrenceStats CooccurrenceStats::build(const std::vector<Document>& docs,
                                           const TopicVocab& tv,
                                           std::int64_t window) {
  TGLM_CHECK_ARG(!docs.empty(), "CooccurrenceStats: empty reference corpus");
  TGLM_CHECK_ARG(window >= 2, "CooccurrenceStats: window must be >= 2");
  CooccurrenceStats stats;
  stats.window_ = window;
  stats.tv_size_ = tv.size();
  stats.unigram_.assign(static_cast<std::size_t>(tv.size()), 0);

  std::vector<std::int32_t> filtered;
  for (const auto& doc : docs) {
    filtered.clear();
    for (std::int32_t id : doc.token_ids) {
      const std::int32_t idx = tv.index_of(id);
      if (idx >= 0) filtered.push_back(idx);
    }
    if (filtered.empty()) continue;
    const std::int64_t n = static_cast<std::int64_t>(filtered.size());
    const std::int64_t n_windows = n <= window ? 1 : n - window + 1;
    std::vector<std::int32_t> uniq;
    for (std::int64_t w = 0; w < n_windows; ++w) {
      const std::int64_t end = std::min(w + window, n);
      uniq.assign(filtered.begin() + w, filtered.begin() + end);
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (std::size_t i = 0; i < uniq.size(); ++i) {
        ++stats.unigram_[static_cast<std::size_t>(uniq[i])];
        for (std::size_t j = i + 1; j < uniq.size(); ++j)
          ++stats.pairs_[pair_key(uniq[i], uniq[j])];
      }
      ++stats.total_windows_;
    }
  }
  TGLM_CHECK_ARG(stats.total_windows_ > 0,
                 "CooccurrenceStats: no topic-vocab tokens in reference corpus");
  return stats;
}

std::uint64_t CooccurrenceStats::pair_count(std::int32_t a, std::int32_t b) const {
  const auto it = pairs_.find(pair_key(a, b));
  return it == pairs_.end() ? 0 : it->second;
}

void CooccurrenceStats::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("CooccurrenceStats::save: cannot open " + path);
  auto put_u64 = [&](std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
  };
  put_u64(static_cast<std::uint64_t>(window_));
  put_u64(static_cast<std::uint64_t>(tv_size_));
  put_u64(total_windows_);
  for (std::uint64_t c : unigram_) put_u64(c);
  // Sparse pair records, key-sorted for byte-stable output.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted(pairs_.begin(),
                                                              pairs_.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [k, v] : sorted) {
    put_u64(k);
    put_u64(v);
  }
  os << std::flush;
  if (!os) throw IoError("CooccurrenceStats::save: write failed for " + path);
}

CooccurrenceStats CooccurrenceStats::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("CooccurrenceStats::load: cannot open " + path);
  auto get_u64 = [&]() {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw IoError("CooccurrenceStats::load: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  };
  CooccurrenceStats stats;
  stats.window_ = static_cast<std::int64_t>(get_u64());
  stats.tv_size_ = static_cast<std::int64_t>(get_u64());
  stats.total_windows_ = get_u64();
  stats.unigram_.resize(static_cast<std::size_t>(stats.tv_size_));
  for (auto& c : stats.unigram_) c = get_u64();
  while (is.peek() != EOF) {
    const std::uint64_t k = get_u64();
    const std::uint64_t v = get_u64();
    stats.pairs_[k] = v;
  }
  return stats;
}

double npmi_topic(const std::vector<std::int32_t>& top_words,
                  const CooccurrenceStats& stats) {
  const std::int64_t n = static_cast<std::int64_t>(top_words.size());
  TGLM_CHECK_ARG(n >= 2, "npmi_topic: need at least two words");
  for (std::int32_t w : top_words) {
    TGLM_CHECK_ARG(w >= 0 && w < stats.tv_size(),
                   "npmi_topic: word outside the statistics vocabulary");
    TGLM_CHECK_ARG(stats.unigram_count(w) > 0,
                   "npmi_topic: word never observed in the reference corpus");
  }
  double sum = 0.0;
  std::int64_t pairs = 0;
  for (std::int64_t i = 0; i < n - 1; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      ++pairs;
      const std::uint64_t joint =
          stats.pair_count(top_words[static_cast<std::size_t>(i)],
                           top_words[static_cast<std::size_t>(j)]);
      if (joint == 0) {
        sum += -1.0;  // p(wi,wj) -> 0 limit
        continue;
      }
      const double p_ij = static_cast<double>(joint) /
                          static_cast<double>(stats.total_windows());
      const double p_i = stats.p_word(top_words[static_cast<std::size_t>(i)]);
      const double p_j = stats.p_word(top_words[static_cast<std::size_t>(j)]);
      if (p_ij >= 1.0) {
        // Both words in every window: perfect association.
        sum += 1.0;
        continue;
      }
      // Difference form: (log p_ij - log p_i - log p_j) / -log p_ij.
      // When p_ij == p_i == p_j this is (-l)/(-l) = 1 with no rounding slack.
      const double l_ij = std::log(p_ij);
      sum += (l_ij - std::log(p_i) - std::log(p_j)) / -l_ij;
    }
  }
  return sum / static_cast<double>(pairs);
}

double topic_coherence_at(const std::vector<std::int32_t>& ranked_words,
                          std::int64_t n, const CooccurrenceStats& stats) {
  TGLM_CHECK_ARG(static_cast<std::int64_t>(ranked_words.size()) >= n,
                 "topic_coherence_at: not enough ranked words");
  std::vector<std::int32_t> head(ranked_words.begin(), ranked_words.begin() + n);
  return npmi_topic(head, stats);
}

double model_coherence(const std::vector<std::vector<std::int32_t>>& topics,
                       const CooccurrenceStats& stats) {
  TGLM_CHECK_ARG(!topics.empty(), "model_coherence: no topics");
  static constexpr std::int64_t kTopN[4] = {5, 10, 15, 20};
  double total = 0.0;
  for (const auto& topic : topics) {
    TGLM_CHECK_ARG(topic.size() >= 20,
                   "model_coherence: each topic needs at least 20 ranked words");
    double topic_sum = 0.0;
    for (std::int64_t n : kTopN) topic_sum += topic_coherence_at(topic, n, stats);
    total += topic_sum / 4.0;
  }
  return total / static_cast<double>(topics.size());
}

}  // namespace tglm
