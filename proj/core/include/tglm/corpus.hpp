#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tglm/vocabulary.hpp"

namespace tglm {

// One document as an id sequence. sentence_spans partition [0, size()) in
// order; <sos> opens the first sentence and <eos> closes the last.
struct Document {
  std::vector<std::int32_t> token_ids;
  std::vector<std::pair<std::int32_t, std::int32_t>> sentence_spans;
  std::int32_t doc_id = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(token_ids.size()); }
  std::int64_t num_sentences() const {
    return static_cast<std::int64_t>(sentence_spans.size());
  }
};

// Counts over the topic vocabulary for one document region.
struct CountVector {
  std::vector<std::uint32_t> counts;  // length |TopicVocab|
  std::int32_t doc_id = 0;
  std::optional<std::int32_t> excluded_sentence;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

// Raw text documents: whitespace tokens with a sentence separator token.
struct RawCorpus {
  std::vector<std::vector<std::string>> docs;  // separator tokens removed
  std::vector<std::vector<std::int32_t>> sentence_lengths;  // tokens per sentence
};

// Reads a one-document-per-line UTF-8 file. Tokens are whitespace separated;
// `sentence_sep` tokens mark sentence boundaries and are not kept as tokens.
RawCorpus read_raw_corpus(const std::string& path,
                          const std::string& sentence_sep = "</s>");

// Encodes raw documents against a vocabulary: <sos> prepended, <eos>
// appended (document-level convention, not per sentence), unknowns mapped to
// <unk>. Sentence spans cover the specials at the edges.
std::vector<Document> encode_corpus(const RawCorpus& raw, const Vocabulary& vocab,
                                    std::int32_t first_doc_id = 0);

// Counts the topic-vocab tokens of `doc`, optionally skipping one sentence.
CountVector bag_of_words(const Document& doc, const TopicVocab& tv,
                         std::optional<std::int32_t> exclude_sentence = {});

// Counts skipping every sentence that overlaps [begin, end) token positions.
// Used when a training window spans sentence boundaries.
CountVector bag_of_words_excluding_overlap(const Document& doc,
                                           const TopicVocab& tv,
                                           std::int64_t begin, std::int64_t end);

// Binary bag-of-words cache: per record doc_id u32, nnz u32, then
// (tv_index u32, count u32) pairs, little-endian.
void save_bow_cache(const std::string& path, const std::vector<CountVector>& bows);
std::vector<CountVector> load_bow_cache(const std::string& path,
                                        std::int64_t tv_size);

}  // namespace tglm
