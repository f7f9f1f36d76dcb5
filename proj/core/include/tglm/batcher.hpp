#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tglm/corpus.hpp"
#include "tglm/rng.hpp"

namespace tglm {

enum class Conditioning { kDocument, kSentence };

// One row of a batch: up to `length` input tokens plus aligned next-token
// targets. Rows with carryover=true continue the hidden state of the same
// document (or sentence) from the previous batch in this row stream.
struct BatchRow {
  std::int32_t doc_id = -1;      // -1 marks a padding row
  std::int32_t doc_index = -1;   // position in the corpus vector
  std::int32_t offset = 0;       // tokens already consumed in this stream segment
  bool carryover = false;
  std::int32_t input_len = 0;
  std::vector<std::int32_t> inputs;        // input_len entries
  std::vector<std::int32_t> targets;       // input_len entries, -1 where masked
  std::int64_t target_begin = 0;           // doc coords of first/last+1 target
  std::int64_t target_end = 0;
};

struct SequenceBatch {
  std::vector<BatchRow> rows;
  std::int64_t length = 0;  // max input_len across rows (<= configured L)

  std::int64_t count_targets() const {
    std::int64_t n = 0;
    for (const auto& r : rows)
      for (std::int32_t t : r.targets)
        if (t >= 0) ++n;
    return n;
  }
};

// Chunks documents into consecutive length-L windows across B parallel row
// streams. Document-level mode carries state across a document's windows;
// sentence-level mode restarts chunking at every sentence boundary and feeds
// <sos> at sentence starts so every token after the document opener is a
// target in both modes.
class SequenceBatcher {
 public:
  SequenceBatcher(const std::vector<Document>* docs, std::int64_t seq_len,
                  std::int64_t batch_size, Conditioning mode,
                  std::int32_t sos_id);

  // Shuffles document order when order_rng != nullptr; windows within a
  // document always stay in order.
  void start_epoch(Rng* order_rng);

  std::optional<SequenceBatch> next();

  std::int64_t num_batches() const { return num_batches_; }
  std::int64_t batch_size() const { return batch_size_; }
  std::int64_t seq_len() const { return seq_len_; }

  // Σ_d (T_d - 1): every token except the document opener is predicted once.
  std::int64_t total_targets() const;

 private:
  struct WindowSpec {
    std::int32_t doc_index = -1;
    std::int32_t offset = 0;
    bool carryover = false;
    std::vector<std::int32_t> inputs;
    std::vector<std::int32_t> targets;
    std::int64_t target_begin = -1;
    std::int64_t target_end = 0;
  };

  void append_doc_windows(std::int32_t doc_index, std::vector<WindowSpec>& out) const;

  const std::vector<Document>* docs_;
  std::int64_t seq_len_;
  std::int64_t batch_size_;
  Conditioning mode_;
  std::int32_t sos_id_;

  std::vector<std::vector<WindowSpec>> streams_;  // one per row
  std::int64_t num_batches_ = 0;
  std::int64_t cursor_ = 0;
};

}  // namespace tglm
