#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tglm {

// Token <-> id map with dense ids in [0, V). Specials come first so that a
// vocabulary file is just one token per line with the line number as the id.
class Vocabulary {
 public:
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kSos = "<sos>";
  static constexpr const char* kEos = "<eos>";

  Vocabulary() = default;

  // Counts the stream and keeps every token whose training frequency is at
  // least min_count; rarer tokens map to <unk>. Also retains the frequency
  // and document-frequency tables needed for topic-vocabulary filtering.
  static Vocabulary build(const std::vector<std::vector<std::string>>& docs,
                          std::int64_t min_count);

  std::int64_t size() const { return static_cast<std::int64_t>(id_to_token_.size()); }
  std::int32_t unk_id() const { return 0; }
  std::int32_t sos_id() const { return 1; }
  std::int32_t eos_id() const { return 2; }
  static constexpr std::int32_t num_specials() { return 3; }

  std::int32_t id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? unk_id() : it->second;
  }
  bool contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
  }
  const std::string& token(std::int32_t id) const {
    return id_to_token_.at(static_cast<std::size_t>(id));
  }

  std::int64_t frequency(std::int32_t id) const {
    return frequency_.at(static_cast<std::size_t>(id));
  }
  std::int64_t doc_frequency(std::int32_t id) const {
    return doc_frequency_.at(static_cast<std::size_t>(id));
  }
  std::int64_t min_count() const { return min_count_; }

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(std::span<const std::int32_t> ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::int64_t> frequency_;      // per id, training occurrences
  std::vector<std::int64_t> doc_frequency_;  // per id, documents containing it
  std::int64_t min_count_ = 1;
};

// The subset of vocabulary ids admitted to the topic model, with provenance
// for why everything else was dropped.
struct TopicVocab {
  std::vector<std::int32_t> ids;  // ascending vocabulary ids
  std::vector<std::int32_t> vocab_to_tv;  // size V, -1 when excluded
  std::vector<std::int32_t> stop_excluded;
  std::vector<std::int32_t> freq_excluded;
  std::vector<std::int32_t> doc_freq_excluded;

  std::int64_t size() const { return static_cast<std::int64_t>(ids.size()); }
  bool contains(std::int32_t vocab_id) const {
    return vocab_to_tv[static_cast<std::size_t>(vocab_id)] >= 0;
  }
  std::int32_t index_of(std::int32_t vocab_id) const {
    return vocab_to_tv[static_cast<std::size_t>(vocab_id)];
  }

  void save(const std::string& path, const Vocabulary& vocab) const;
  static TopicVocab load(const std::string& path, const Vocabulary& vocab);
};

// Filters the vocabulary down to topic-model words: no stop words, none of
// the top `top_frac` most frequent types, and (when min_doc_freq > 0) no
// words seen in fewer than min_doc_freq documents. Specials never qualify.
TopicVocab build_topic_vocab(const Vocabulary& vocab,
                             const std::unordered_set<std::string>& stop_list,
                             double top_frac, std::int64_t min_doc_freq);

std::unordered_set<std::string> load_stop_list(const std::string& path);

}  // namespace tglm
