#include "tglm/corpus.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "tglm/error.hpp"

namespace tglm {

RawCorpus read_raw_corpus(const std::string& path, const std::string& sentence_sep) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_raw_corpus: cannot open " + path);
  RawCorpus out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::vector<std::int32_t> sent_lens;
    std::int32_t cur = 0;
    std::string tok;
    while (ss >> tok) {
      if (tok == sentence_sep) {
        if (cur > 0) sent_lens.push_back(cur);
        cur = 0;
      } else {
        tokens.push_back(tok);
        ++cur;
      }
    }
    if (cur > 0) sent_lens.push_back(cur);
    if (tokens.empty()) continue;
    out.docs.push_back(std::move(tokens));
    out.sentence_lengths.push_back(std::move(sent_lens));
  }
  return out;
}

std::vector<Document> encode_corpus(const RawCorpus& raw, const Vocabulary& vocab,
                                    std::int32_t first_doc_id) {
  std::vector<Document> docs;
  docs.reserve(raw.docs.size());
  for (std::size_t d = 0; d < raw.docs.size(); ++d) {
    Document doc;
    doc.doc_id = first_doc_id + static_cast<std::int32_t>(d);
    doc.token_ids.push_back(vocab.sos_id());
    for (const auto& t : raw.docs[d]) doc.token_ids.push_back(vocab.id(t));
    doc.token_ids.push_back(vocab.eos_id());

    // Raw token j sits at encoded position j+1; <sos> joins the first
    // sentence and <eos> the last.
    std::int32_t pos = 0;
    const auto& lens = raw.sentence_lengths[d];
    for (std::size_t s = 0; s < lens.size(); ++s) {
      std::int32_t begin = s == 0 ? 0 : pos + 1;
      std::int32_t end = pos + lens[s] + 1;
      if (s + 1 == lens.size()) end += 1;
      doc.sentence_spans.emplace_back(begin, end);
      pos += lens[s];
    }
    if (doc.sentence_spans.empty()) {
      doc.sentence_spans.emplace_back(0, static_cast<std::int32_t>(doc.size()));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

CountVector bag_of_words(const Document& doc, const TopicVocab& tv,
                         std::optional<std::int32_t> exclude_sentence) {
  if (exclude_sentence) {
    TGLM_CHECK_ARG(*exclude_sentence >= 0 &&
                       *exclude_sentence < doc.num_sentences(),
                   "bag_of_words: exclude_sentence out of range");
  }
  CountVector cv;
  cv.doc_id = doc.doc_id;
  cv.excluded_sentence = exclude_sentence;
  cv.counts.assign(static_cast<std::size_t>(tv.size()), 0);
  std::int64_t skip_begin = -1, skip_end = -1;
  if (exclude_sentence) {
    const auto& span = doc.sentence_spans[static_cast<std::size_t>(*exclude_sentence)];
    skip_begin = span.first;
    skip_end = span.second;
  }
  for (std::int64_t i = 0; i < doc.size(); ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    const std::int32_t idx = tv.index_of(doc.token_ids[static_cast<std::size_t>(i)]);
    if (idx >= 0) ++cv.counts[static_cast<std::size_t>(idx)];
  }
  return cv;
}

CountVector bag_of_words_excluding_overlap(const Document& doc,
                                           const TopicVocab& tv,
                                           std::int64_t begin, std::int64_t end) {
  CountVector cv;
  cv.doc_id = doc.doc_id;
  cv.counts.assign(static_cast<std::size_t>(tv.size()), 0);
  for (const auto& span : doc.sentence_spans) {
    const bool overlaps = span.first < end && begin < span.second;
    if (overlaps) continue;
    for (std::int64_t i = span.first; i < span.second; ++i) {
      const std::int32_t idx = tv.index_of(doc.token_ids[static_cast<std::size_t>(i)]);
      if (idx >= 0) ++cv.counts[static_cast<std::size_t>(idx)];
    }
  }
  return cv;
}

namespace {

template <typename T>
void write_le(std::ofstream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw IoError("bow cache: truncated file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void save_bow_cache(const std::string& path, const std::vector<CountVector>& bows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_bow_cache: cannot open " + path);
  for (const auto& cv : bows) {
    std::uint32_t nnz = 0;
    for (auto c : cv.counts)
      if (c > 0) ++nnz;
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cv.doc_id));
    write_le<std::uint32_t>(os, nnz);
    for (std::size_t i = 0; i < cv.counts.size(); ++i) {
      if (cv.counts[i] > 0) {
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(i));
        write_le<std::uint32_t>(os, cv.counts[i]);
      }
    }
  }
  os << std::flush;
  if (!os) throw IoError("save_bow_cache: write failed for " + path);
}

std::vector<CountVector> load_bow_cache(const std::string& path,
                                        std::int64_t tv_size) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_bow_cache: cannot open " + path);
  std::vector<CountVector> bows;
  while (is.peek() != EOF) {
    CountVector cv;
    cv.doc_id = static_cast<std::int32_t>(read_le<std::uint32_t>(is));
    cv.counts.assign(static_cast<std::size_t>(tv_size), 0);
    const std::uint32_t nnz = read_le<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < nnz; ++i) {
      const std::uint32_t idx = read_le<std::uint32_t>(is);
      const std::uint32_t cnt = read_le<std::uint32_t>(is);
      TGLM_CHECK_ARG(idx < cv.counts.size(), "load_bow_cache: index out of range");
      cv.counts[idx] = cnt;
    }
    bows.push_back(std::move(cv));
  }
  return bows;
}

}  // namespace tglm
