#include "tglm/batcher.hpp"

#include <algorithm>
#include <numeric>

#include "tglm/error.hpp"

namespace tglm {

SequenceBatcher::SequenceBatcher(const std::vector<Document>* docs,
                                 std::int64_t seq_len, std::int64_t batch_size,
                                 Conditioning mode, std::int32_t sos_id)
    : docs_(docs),
      seq_len_(seq_len),
      batch_size_(batch_size),
      mode_(mode),
      sos_id_(sos_id) {
  TGLM_CHECK_ARG(seq_len_ >= 2, "SequenceBatcher: sequence length must be >= 2");
  TGLM_CHECK_ARG(batch_size_ >= 1, "SequenceBatcher: batch size must be >= 1");
  start_epoch(nullptr);
}

void SequenceBatcher::append_doc_windows(std::int32_t doc_index,
                                         std::vector<WindowSpec>& out) const {
  const Document& doc = (*docs_)[static_cast<std::size_t>(doc_index)];

  // Stream segments: (input token, target position) pairs. input -1 stands
  // for a synthetic <sos> fed at sentence starts in sentence mode.
  // Document mode is one segment; its final pair has no target (the last
  // token is an input only), matching exact Σ(T_d - 1) accounting.
  struct Pair {
    std::int64_t input_pos;   // -1 => synthetic <sos>
    std::int64_t target_pos;  // -1 => masked
  };
  std::vector<std::vector<Pair>> segments;
  if (mode_ == Conditioning::kDocument) {
    auto& seg = segments.emplace_back();
    for (std::int64_t i = 0; i < doc.size(); ++i) {
      seg.push_back({i, i + 1 < doc.size() ? i + 1 : -1});
    }
  } else {
    for (std::size_t s = 0; s < doc.sentence_spans.size(); ++s) {
      const auto [sb, se] = doc.sentence_spans[s];
      auto& seg = segments.emplace_back();
      if (s == 0) {
        for (std::int64_t i = sb; i + 1 < se; ++i) seg.push_back({i, i + 1});
      } else {
        seg.push_back({-1, sb});
        for (std::int64_t i = sb; i + 1 < se; ++i) seg.push_back({i, i + 1});
      }
      if (seg.empty()) segments.pop_back();
    }
  }

  for (const auto& seg : segments) {
    const std::int64_t n = static_cast<std::int64_t>(seg.size());
    for (std::int64_t begin = 0; begin < n; begin += seq_len_) {
      const std::int64_t len = std::min(seq_len_, n - begin);
      WindowSpec w;
      w.doc_index = doc_index;
      w.offset = static_cast<std::int32_t>(begin);
      w.carryover = begin > 0;
      w.inputs.reserve(static_cast<std::size_t>(len));
      w.targets.reserve(static_cast<std::size_t>(len));
      for (std::int64_t j = begin; j < begin + len; ++j) {
        const auto& p = seg[static_cast<std::size_t>(j)];
        w.inputs.push_back(
            p.input_pos < 0
                ? sos_id_
                : doc.token_ids[static_cast<std::size_t>(p.input_pos)]);
        w.targets.push_back(
            p.target_pos < 0
                ? -1
                : doc.token_ids[static_cast<std::size_t>(p.target_pos)]);
        if (p.target_pos >= 0) {
          if (w.target_begin < 0) w.target_begin = p.target_pos;
          w.target_end = p.target_pos + 1;
        }
      }
      out.push_back(std::move(w));
    }
  }
}

void SequenceBatcher::start_epoch(Rng* order_rng) {
  std::vector<std::int32_t> order(docs_->size());
  std::iota(order.begin(), order.end(), 0);
  if (order_rng != nullptr) order_rng->shuffle(order.begin(), order.end());

  streams_.assign(static_cast<std::size_t>(batch_size_), {});
  // Round-robin document assignment keeps streams balanced without
  // splitting any document across rows.
  for (std::size_t i = 0; i < order.size(); ++i) {
    append_doc_windows(order[i], streams_[i % static_cast<std::size_t>(batch_size_)]);
  }
  num_batches_ = 0;
  for (const auto& s : streams_)
    num_batches_ = std::max(num_batches_, static_cast<std::int64_t>(s.size()));
  cursor_ = 0;
}

std::optional<SequenceBatch> SequenceBatcher::next() {
  if (cursor_ >= num_batches_) return std::nullopt;
  SequenceBatch batch;
  batch.rows.resize(static_cast<std::size_t>(batch_size_));
  for (std::int64_t r = 0; r < batch_size_; ++r) {
    const auto& stream = streams_[static_cast<std::size_t>(r)];
    BatchRow& row = batch.rows[static_cast<std::size_t>(r)];
    if (cursor_ >= static_cast<std::int64_t>(stream.size())) continue;  // padding
    const WindowSpec& w = stream[static_cast<std::size_t>(cursor_)];
    const Document& doc = (*docs_)[static_cast<std::size_t>(w.doc_index)];
    row.doc_id = doc.doc_id;
    row.doc_index = w.doc_index;
    row.offset = w.offset;
    row.carryover = w.carryover;
    row.input_len = static_cast<std::int32_t>(w.inputs.size());
    row.inputs = w.inputs;
    row.targets = w.targets;
    row.target_begin = std::max<std::int64_t>(w.target_begin, 0);
    row.target_end = w.target_end;
    batch.length = std::max(batch.length,
                            static_cast<std::int64_t>(row.input_len));
  }
  ++cursor_;
  return batch;
}

std::int64_t SequenceBatcher::total_targets() const {
  std::int64_t n = 0;
  for (const auto& d : *docs_) n += d.size() - 1;
  return n;
}

}  // namespace tglm
