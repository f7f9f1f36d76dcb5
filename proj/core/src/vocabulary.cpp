#include "tglm/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tglm/error.hpp"

namespace tglm {

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& docs,
                             std::int64_t min_count) {
  TGLM_CHECK_ARG(!docs.empty(), "Vocabulary::build: empty token stream");
  std::unordered_map<std::string, std::int64_t> freq;
  std::unordered_map<std::string, std::int64_t> doc_freq;
  std::int64_t total = 0;
  for (const auto& doc : docs) {
    std::unordered_set<std::string> seen;
    for (const auto& tok : doc) {
      ++freq[tok];
      ++total;
      seen.insert(tok);
    }
    for (const auto& tok : seen) ++doc_freq[tok];
  }
  TGLM_CHECK_ARG(total > 0, "Vocabulary::build: empty token stream");

  Vocabulary v;
  v.min_count_ = min_count;
  v.id_to_token_ = {kUnk, kSos, kEos};
  // Kept types in a stable order: frequency desc, then lexicographic.
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, n] : freq) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, n] : kept) v.id_to_token_.push_back(tok);

  v.frequency_.assign(v.id_to_token_.size(), 0);
  v.doc_frequency_.assign(v.id_to_token_.size(), 0);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    v.token_to_id_[v.id_to_token_[i]] = static_cast<std::int32_t>(i);
  }
  // Unknown-token statistics pool everything below the threshold.
  for (const auto& [tok, n] : freq) {
    auto it = v.token_to_id_.find(tok);
    const std::int32_t id = it == v.token_to_id_.end() ? v.unk_id() : it->second;
    v.frequency_[static_cast<std::size_t>(id)] += n;
    v.doc_frequency_[static_cast<std::size_t>(id)] += doc_freq[tok];
  }
  return v;
}

std::vector<std::int32_t> Vocabulary::encode(
    const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(
    std::span<const std::int32_t> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (std::int32_t i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("Vocabulary::save: cannot open " + path);
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    os << id_to_token_[i] << '\t' << frequency_[i] << '\t' << doc_frequency_[i]
       << '\n';
  }
  os << std::flush;
  if (!os) throw IoError("Vocabulary::save: write failed for " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("Vocabulary::load: cannot open " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    TGLM_CHECK_ARG(t1 != std::string::npos && t2 != std::string::npos,
                   "Vocabulary::load: malformed line in " + path);
    v.id_to_token_.push_back(line.substr(0, t1));
    v.frequency_.push_back(std::stoll(line.substr(t1 + 1, t2 - t1 - 1)));
    v.doc_frequency_.push_back(std::stoll(line.substr(t2 + 1)));
  }
  TGLM_CHECK_ARG(v.id_to_token_.size() >= 3 && v.id_to_token_[0] == kUnk &&
                     v.id_to_token_[1] == kSos && v.id_to_token_[2] == kEos,
                 "Vocabulary::load: specials missing in " + path);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i)
    v.token_to_id_[v.id_to_token_[i]] = static_cast<std::int32_t>(i);
  return v;
}

TopicVocab build_topic_vocab(const Vocabulary& vocab,
                             const std::unordered_set<std::string>& stop_list,
                             double top_frac, std::int64_t min_doc_freq) {
  TGLM_CHECK_ARG(top_frac >= 0.0 && top_frac < 1.0,
                 "build_topic_vocab: top_frac out of [0, 1)");
  const std::int64_t v_size = vocab.size();
  TopicVocab tv;
  tv.vocab_to_tv.assign(static_cast<std::size_t>(v_size), -1);

  // Non-special types ranked by corpus frequency; the top ceil(frac * types)
  // of them are excluded.
  std::vector<std::int32_t> by_freq;
  for (std::int32_t id = Vocabulary::num_specials(); id < v_size; ++id)
    by_freq.push_back(id);
  std::sort(by_freq.begin(), by_freq.end(), [&](std::int32_t a, std::int32_t b) {
    if (vocab.frequency(a) != vocab.frequency(b))
      return vocab.frequency(a) > vocab.frequency(b);
    return a < b;
  });
  const std::int64_t n_types = static_cast<std::int64_t>(by_freq.size());
  const std::int64_t n_top = top_frac > 0.0
      ? static_cast<std::int64_t>(std::ceil(top_frac * static_cast<double>(n_types)))
      : 0;
  std::unordered_set<std::int32_t> top_excluded(by_freq.begin(),
                                                by_freq.begin() + n_top);

  for (std::int32_t id = Vocabulary::num_specials(); id < v_size; ++id) {
    if (stop_list.count(vocab.token(id))) {
      tv.stop_excluded.push_back(id);
    } else if (top_excluded.count(id)) {
      tv.freq_excluded.push_back(id);
    } else if (min_doc_freq > 0 && vocab.doc_frequency(id) < min_doc_freq) {
      tv.doc_freq_excluded.push_back(id);
    } else {
      tv.vocab_to_tv[static_cast<std::size_t>(id)] =
          static_cast<std::int32_t>(tv.ids.size());
      tv.ids.push_back(id);
    }
  }
  return tv;
}

void TopicVocab::save(const std::string& path, const Vocabulary& vocab) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("TopicVocab::save: cannot open " + path);
  for (std::int32_t id : ids) os << vocab.token(id) << '\n';
  os << std::flush;
  if (!os) throw IoError("TopicVocab::save: write failed for " + path);
}

TopicVocab TopicVocab::load(const std::string& path, const Vocabulary& vocab) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("TopicVocab::load: cannot open " + path);
  TopicVocab tv;
  tv.vocab_to_tv.assign(static_cast<std::size_t>(vocab.size()), -1);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TGLM_CHECK_ARG(vocab.contains(line),
                   "TopicVocab::load: token not in vocabulary: " + line);
    const std::int32_t id = vocab.id(line);
    tv.vocab_to_tv[static_cast<std::size_t>(id)] =
        static_cast<std::int32_t>(tv.ids.size());
    tv.ids.push_back(id);
  }
  return tv;
}

std::unordered_set<std::string> load_stop_list(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_stop_list: cannot open " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

}  // namespace tglm
