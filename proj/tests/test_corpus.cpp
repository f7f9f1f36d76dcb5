#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tglm/batcher.hpp"
#include "tglm/corpus.hpp"
#include "tglm/synthetic.hpp"
#include "tglm/vocabulary.hpp"

namespace tglm {
namespace {

std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tglm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

RawCorpus raw_from_lines(const std::vector<std::string>& lines) {
  const std::string dir = temp_dir("raw");
  const std::string path = dir + "/c.txt";
  std::ofstream os(path);
  for (const auto& l : lines) os << l << '\n';
  os.close();
  return read_raw_corpus(path);
}

TEST(Vocabulary, MinCountThresholdEdge) {
  Vocabulary v = Vocabulary::build({{"a", "a", "b"}}, 2);
  // a + the three specials; b below threshold maps to <unk>.
  EXPECT_EQ(v.size(), 4);
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), v.unk_id());
  EXPECT_EQ(v.frequency(v.unk_id()), 1);
}

TEST(Vocabulary, MinCountOneKeepsEverything) {
  Vocabulary v = Vocabulary::build({{"a", "b", "c", "a"}}, 1);
  EXPECT_EQ(v.size(), 6);
  EXPECT_NE(v.id("b"), v.unk_id());
  EXPECT_NE(v.id("c"), v.unk_id());
}

TEST(Vocabulary, SampleCorpusMatchesIndependentCount) {
  // Generated sample stands in for the bundled corpus; the oracle is an
  // independent one-pass frequency count over the same file.
  const std::string dir = temp_dir("vocab_sample");
  SynthConfig cfg;
  cfg.docs = 100;
  cfg.doc_len = 120;
  Rng rng(7);
  generate_synthetic_corpus(cfg, dir, rng);

  RawCorpus raw = read_raw_corpus(dir + "/train.txt");
  const std::int64_t min_count = 3;
  Vocabulary v = Vocabulary::build(raw.docs, min_count);

  std::map<std::string, std::int64_t> freq;
  std::ifstream is(dir + "/train.txt");
  std::string tok;
  while (is >> tok)
    if (tok != "</s>") ++freq[tok];
  std::int64_t kept = 0;
  for (const auto& [t, n] : freq)
    if (n >= min_count) ++kept;
  EXPECT_EQ(v.size(), kept + 3);
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  Vocabulary v = Vocabulary::build({{"a", "a", "b", "b", "c"}}, 2);
  const std::vector<std::string> tokens = {"a", "c", "b"};
  const auto ids = v.encode(tokens);
  const auto back = v.decode(ids);
  EXPECT_EQ(back[0], "a");
  EXPECT_EQ(back[1], Vocabulary::kUnk);  // c was below min_count
  EXPECT_EQ(back[2], "b");
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const std::string dir = temp_dir("vocab_io");
  Vocabulary v = Vocabulary::build({{"x", "x", "y", "y", "y"}}, 1);
  v.save(dir + "/vocab.txt");
  Vocabulary w = Vocabulary::load(dir + "/vocab.txt");
  EXPECT_EQ(w.size(), v.size());
  EXPECT_EQ(w.id("y"), v.id("y"));
  EXPECT_EQ(w.frequency(w.id("y")), 3);
}

TEST(TopicVocab, NoOpFilterKeepsAllNonSpecials) {
  Vocabulary v = Vocabulary::build({{"a", "b", "c"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  EXPECT_EQ(tv.size(), v.size() - Vocabulary::num_specials());
}

TEST(TopicVocab, TopFractionBoundary) {
  // 1000 types, "the" most frequent; top_frac=0.001 excludes exactly it.
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> doc;
  for (int i = 0; i < 999; ++i) doc.push_back("w" + std::to_string(i));
  for (int i = 0; i < 50; ++i) doc.push_back("the");
  docs.push_back(doc);
  Vocabulary v = Vocabulary::build(docs, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.001, 0);
  EXPECT_FALSE(tv.contains(v.id("the")));
  EXPECT_EQ(tv.size(), 999);
  ASSERT_EQ(tv.freq_excluded.size(), 1u);
  EXPECT_EQ(tv.freq_excluded[0], v.id("the"));
}

TEST(TopicVocab, StopAndDocFreqFilters) {
  const std::string dir = temp_dir("tv_sample");
  SynthConfig cfg;
  cfg.docs = 60;
  cfg.doc_len = 80;
  Rng rng(11);
  generate_synthetic_corpus(cfg, dir, rng);
  RawCorpus raw = read_raw_corpus(dir + "/train.txt");
  Vocabulary v = Vocabulary::build(raw.docs, 1);
  const auto stops = load_stop_list(dir + "/stopwords.txt");
  TopicVocab tv = build_topic_vocab(v, stops, 0.0, 2);

  // Independent set difference over the vocabulary file contents.
  std::int64_t expected = 0;
  for (std::int32_t id = Vocabulary::num_specials(); id < v.size(); ++id) {
    if (stops.count(v.token(id))) continue;
    if (v.doc_frequency(id) < 2) continue;
    ++expected;
  }
  EXPECT_EQ(tv.size(), expected);
  for (std::int32_t id : tv.ids) EXPECT_EQ(stops.count(v.token(id)), 0u);
}

TEST(TopicVocab, SaveLoadRoundTrip) {
  const std::string dir = temp_dir("tv_io");
  Vocabulary v = Vocabulary::build({{"a", "b", "c", "d"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {"b"}, 0.0, 0);
  tv.save(dir + "/tv.txt", v);
  TopicVocab w = TopicVocab::load(dir + "/tv.txt", v);
  EXPECT_EQ(w.ids, tv.ids);
}

Document encode_single(const std::string& line, const Vocabulary& v) {
  const std::string dir = temp_dir("encode_single");
  std::ofstream os(dir + "/d.txt");
  os << line << '\n';
  os.close();
  return encode_corpus(read_raw_corpus(dir + "/d.txt"), v)[0];
}

TEST(Corpus, SentenceSpansPartitionDocument) {
  Vocabulary v = Vocabulary::build({{"a", "b", "c"}}, 1);
  Document d = encode_single("a b </s> c a </s> b", v);
  // <sos> a b | c a | b <eos>
  EXPECT_EQ(d.size(), 7);
  ASSERT_EQ(d.num_sentences(), 3);
  EXPECT_EQ(d.sentence_spans[0].first, 0);
  EXPECT_EQ(d.sentence_spans[0].second, 3);
  EXPECT_EQ(d.sentence_spans[1].first, 3);
  EXPECT_EQ(d.sentence_spans[1].second, 5);
  EXPECT_EQ(d.sentence_spans[2].first, 5);
  EXPECT_EQ(d.sentence_spans[2].second, 7);
  EXPECT_EQ(d.token_ids.front(), v.sos_id());
  EXPECT_EQ(d.token_ids.back(), v.eos_id());
// 'b' appears twice: id sequence check
  EXPECT_EQ(d.token_ids[1], v.id("a"));
}

TEST(BagOfWords, FullExclusionGivesZeroVector) {
  Vocabulary v = Vocabulary::build({{"a", "b"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  Document d = encode_single("a b a", v);
  ASSERT_EQ(d.num_sentences(), 1);
  CountVector cv = bag_of_words(d, tv, 0);
  EXPECT_EQ(cv.total(), 0u);
}

TEST(BagOfWords, AbsentExclusionCountsWholeDocument) {
  Vocabulary v = Vocabulary::build({{"a", "b"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  Document d = encode_single("a b a", v);
  CountVector cv = bag_of_words(d, tv);
  EXPECT_EQ(cv.counts[static_cast<std::size_t>(tv.index_of(v.id("a")))], 2u);
  EXPECT_EQ(cv.counts[static_cast<std::size_t>(tv.index_of(v.id("b")))], 1u);
}

TEST(BagOfWords, MiddleSentenceExclusionMatchesPerSentenceSum) {
  Vocabulary v = Vocabulary::build({{"a", "b", "c"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  Document d = encode_single("a b </s> c c a </s> b a", v);
  ASSERT_EQ(d.num_sentences(), 3);
  CountVector excl = bag_of_words(d, tv, 1);
  // Independent per-sentence counting of sentences 0 and 2.
  std::vector<std::uint32_t> expected(static_cast<std::size_t>(tv.size()), 0);
  for (int s : {0, 2}) {
    const auto [b, e] = d.sentence_spans[static_cast<std::size_t>(s)];
    for (std::int32_t i = b; i < e; ++i) {
      const auto idx = tv.index_of(d.token_ids[static_cast<std::size_t>(i)]);
      if (idx >= 0) ++expected[static_cast<std::size_t>(idx)];
    }
  }
  EXPECT_EQ(excl.counts, expected);
}

TEST(BagOfWords, ExclusionDifferenceEqualsSentenceBag) {
  Vocabulary v = Vocabulary::build({{"a", "b", "c", "d"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  Document d = encode_single("a b c </s> d a b </s> c d a", v);
  const CountVector full = bag_of_words(d, tv);
  for (std::int32_t j = 0; j < d.num_sentences(); ++j) {
    const CountVector excl = bag_of_words(d, tv, j);
    const auto [b, e] = d.sentence_spans[static_cast<std::size_t>(j)];
    std::vector<std::uint32_t> sentence(static_cast<std::size_t>(tv.size()), 0);
    for (std::int32_t i = b; i < e; ++i) {
      const auto idx = tv.index_of(d.token_ids[static_cast<std::size_t>(i)]);
      if (idx >= 0) ++sentence[static_cast<std::size_t>(idx)];
    }
    for (std::size_t w = 0; w < sentence.size(); ++w)
      EXPECT_EQ(full.counts[w] - excl.counts[w], sentence[w]);
  }
}

TEST(BagOfWords, OverlapExclusionSkipsTouchedSentences) {
  Vocabulary v = Vocabulary::build({{"a", "b", "c"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  Document d = encode_single("a a </s> b b </s> c c", v);
  // Range straddling sentences 0 and 1 leaves only sentence 2.
  CountVector cv = bag_of_words_excluding_overlap(d, tv, 2, 4);
  EXPECT_EQ(cv.counts[static_cast<std::size_t>(tv.index_of(v.id("a")))], 0u);
  EXPECT_EQ(cv.counts[static_cast<std::size_t>(tv.index_of(v.id("b")))], 0u);
  EXPECT_EQ(cv.counts[static_cast<std::size_t>(tv.index_of(v.id("c")))], 2u);
}

TEST(BowCache, RoundTrip) {
  const std::string dir = temp_dir("bow_cache");
  Vocabulary v = Vocabulary::build({{"a", "b", "c"}}, 1);
  TopicVocab tv = build_topic_vocab(v, {}, 0.0, 0);
  Document d1 = encode_single("a b a", v);
  Document d2 = encode_single("c c", v);
  d2.doc_id = 1;
  std::vector<CountVector> bows{bag_of_words(d1, tv), bag_of_words(d2, tv)};
  save_bow_cache(dir + "/bows.bin", bows);
  const auto loaded = load_bow_cache(dir + "/bows.bin", tv.size());
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0].counts, bows[0].counts);
  EXPECT_EQ(loaded[1].counts, bows[1].counts);
  EXPECT_EQ(loaded[1].doc_id, 1);
}

std::vector<Document> synthetic_docs(std::int64_t n_docs, std::int64_t len,
                                     std::int64_t sent_len) {
  // Directly constructed documents with specials at the edges.
  std::vector<Document> docs;
  for (std::int64_t d = 0; d < n_docs; ++d) {
    Document doc;
    doc.doc_id = static_cast<std::int32_t>(d);
    for (std::int64_t i = 0; i < len; ++i)
      doc.token_ids.push_back(static_cast<std::int32_t>(3 + (i + d) % 5));
    doc.token_ids.front() = 1;  // <sos>
    doc.token_ids.back() = 2;   // <eos>
    for (std::int64_t b = 0; b < len; b += sent_len) {
      doc.sentence_spans.emplace_back(
          static_cast<std::int32_t>(b),
          static_cast<std::int32_t>(std::min(len, b + sent_len)));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

TEST(Batcher, DocumentWindowArithmetic) {
  auto docs = synthetic_docs(1, 61, 61);
  SequenceBatcher batcher(&docs, 30, 1, Conditioning::kDocument, 1);
  std::vector<std::int32_t> lens;
  std::vector<bool> carry;
  while (auto b = batcher.next()) {
    lens.push_back(b->rows[0].input_len);
    carry.push_back(b->rows[0].carryover);
  }
  EXPECT_EQ(lens, (std::vector<std::int32_t>{30, 30, 1}));
  EXPECT_EQ(carry, (std::vector<bool>{false, true, true}));
}

TEST(Batcher, SentenceModeWindowsNeverCarryAcrossSentences) {
  auto docs = synthetic_docs(1, 20, 10);
  SequenceBatcher batcher(&docs, 30, 1, Conditioning::kSentence, 1);
  std::int64_t windows = 0;
  while (auto b = batcher.next()) {
    if (b->rows[0].doc_id < 0) continue;
    EXPECT_FALSE(b->rows[0].carryover);
    ++windows;
  }
  EXPECT_EQ(windows, 2);
}

TEST(Batcher, PredictedTokenCountMatchesClosedForm) {
  auto docs = synthetic_docs(7, 47, 12);
  for (auto mode : {Conditioning::kDocument, Conditioning::kSentence}) {
    SequenceBatcher batcher(&docs, 30, 3, mode, 1);
    std::int64_t targets = 0;
    while (auto b = batcher.next()) targets += b->count_targets();
    std::int64_t expected = 0;
    for (const auto& d : docs) expected += d.size() - 1;
    EXPECT_EQ(targets, expected) << "mode " << static_cast<int>(mode);
  }
}

TEST(Batcher, CarryoverRowsContinueSameDocument) {
  auto docs = synthetic_docs(9, 75, 25);
  SequenceBatcher batcher(&docs, 30, 4, Conditioning::kDocument, 1);
  std::vector<std::int32_t> last_doc(4, -1);
  while (auto b = batcher.next()) {
    for (std::size_t r = 0; r < b->rows.size(); ++r) {
      const auto& row = b->rows[r];
      if (row.doc_id < 0) continue;
      if (row.carryover) {
        EXPECT_GT(row.offset, 0);
        EXPECT_EQ(row.doc_id, last_doc[r]);
      }
      last_doc[r] = row.doc_id;
    }
  }
}

TEST(Synthetic, TokenCountExact) {
  const std::string dir = temp_dir("synth_count");
  SynthConfig cfg;
  cfg.docs = 20;
  cfg.doc_len = 57;
  Rng rng(5);
  const auto stats = generate_synthetic_corpus(cfg, dir, rng);
  EXPECT_EQ(stats.emitted_tokens, 20 * 57);
  std::int64_t on_disk = 0;
  for (const char* split : {"train.txt", "valid.txt", "test.txt"}) {
    std::ifstream is(dir + "/" + split);
    std::string tok;
    while (is >> tok)
      if (tok != "</s>") ++on_disk;
  }
  EXPECT_EQ(on_disk, 20 * 57);
}

TEST(Synthetic, DegenerateSharpnessUsesOneBlockPerDoc) {
  const std::string dir = temp_dir("synth_sharp");
  SynthConfig cfg;
  cfg.topics = 2;
  cfg.vocab = 50;
  cfg.docs = 12;
  cfg.doc_len = 60;
  cfg.topic_sharpness = 1e9;
  Rng rng(13);
  generate_synthetic_corpus(cfg, dir, rng);
  for (const char* split : {"train.txt", "valid.txt", "test.txt"}) {
    std::ifstream is(dir + "/" + split);
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ss(line);
      std::string tok;
      bool used_t0 = false, used_t1 = false;
      while (ss >> tok) {
        if (tok.rfind("t0", 0) == 0) used_t0 = true;
        if (tok.rfind("t1", 0) == 0) used_t1 = true;
      }
      EXPECT_FALSE(used_t0 && used_t1) << "document mixes topic blocks";
    }
  }
}

TEST(Synthetic, ThetaGroundTruthRowsAreSimplex) {
  const std::string dir = temp_dir("synth_theta");
  SynthConfig cfg;
  cfg.docs = 10;
  cfg.doc_len = 30;
  Rng rng(3);
  generate_synthetic_corpus(cfg, dir, rng);
  std::ifstream is(dir + "/theta_train.tsv");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    double v, sum = 0.0;
    int k = 0;
    while (ss >> v) {
      sum += v;
      ++k;
    }
    EXPECT_EQ(k, cfg.topics);
    EXPECT_NEAR(sum, 1.0, 1e-6);
    ++rows;
  }
  EXPECT_EQ(rows, 8);  // 80% train split
}

}  // namespace
}  // namespace tglm
