#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tglm/batcher.hpp"
#include "tglm/checkpoint.hpp"
#include "tglm/layers.hpp"
#include "tglm/numarray.hpp"
#include "tglm/ops.hpp"
#include "tglm/params.hpp"
#include "tglm/rng.hpp"

namespace tglm {

enum class Mode { kTrain, kEval };

struct LmConfig {
  std::int64_t vocab = 0;
  std::int64_t layers = 1;
  std::int64_t hidden = 600;
  std::int64_t embed = 300;
  double dropout = 0.4;
  bool with_gru_head = false;
  std::int64_t gru_input_dim = 0;  // width of the head's theta-style input
  Conditioning conditioning = Conditioning::kDocument;
};

// Recurrent state for the B parallel row streams of a batcher. Rows are
// reset when a stream starts a new document (or sentence segment);
// carryover rows must continue the document they left off in.
template <typename T>
struct BatchState {
  std::vector<NumArray<T>> h;  // per layer, B x D
  std::vector<NumArray<T>> c;
  std::vector<std::int32_t> doc_id;
  std::vector<std::int32_t> next_offset;

  void reset(std::int64_t batch, std::int64_t layers, std::int64_t hidden) {
    h.assign(static_cast<std::size_t>(layers), NumArray<T>({batch, hidden}));
    c.assign(static_cast<std::size_t>(layers), NumArray<T>({batch, hidden}));
    doc_id.assign(static_cast<std::size_t>(batch), -1);
    next_offset.assign(static_cast<std::size_t>(batch), 0);
  }

  void reset_row(std::int64_t r) {
    for (auto& m : h) m.mat().row(r).setZero();
    for (auto& m : c) m.mat().row(r).setZero();
    doc_id[static_cast<std::size_t>(r)] = -1;
    next_offset[static_cast<std::size_t>(r)] = 0;
  }
};

// Checks carryover contracts and resets fresh rows. Throws ContractError if
// a carryover row does not continue its stored document.
template <typename T>
void prepare_states(const SequenceBatch& batch, BatchState<T>& state) {
  for (std::size_t b = 0; b < batch.rows.size(); ++b) {
    const BatchRow& row = batch.rows[b];
    if (row.doc_id < 0) continue;
    if (row.carryover) {
      TGLM_CHECK_CONTRACT(
          state.doc_id[b] == row.doc_id &&
              state.next_offset[b] == row.offset,
          "carryover row has no stored predecessor state");
    } else {
      state.reset_row(static_cast<std::int64_t>(b));
    }
    state.doc_id[b] = row.doc_id;
    state.next_offset[b] = row.offset + row.input_len;
  }
}

// Embedding -> stacked LSTM -> dropout stack shared by every neural model.
// Forward runs over a time-major grid (row n = t * B + b) and caches enough
// to run the hand-derived backward pass. Hidden-state carryover across
// windows is detached: backward never propagates into the incoming state.
template <typename T>
class LstmBackbone {
 public:
  struct Grid {
    std::int64_t batch = 0;
    std::int64_t length = 0;
    std::vector<std::int32_t> inputs;   // n = t*B+b; -1 pad
    std::vector<std::int32_t> targets;  // -1 = no target
    std::vector<std::vector<std::uint8_t>> active;  // [t][b]

    std::int64_t n() const { return batch * length; }

    static Grid from(const SequenceBatch& batch_in) {
      Grid g;
      g.batch = static_cast<std::int64_t>(batch_in.rows.size());
      g.length = batch_in.length;
      g.inputs.assign(static_cast<std::size_t>(g.n()), -1);
      g.targets.assign(static_cast<std::size_t>(g.n()), -1);
      g.active.assign(static_cast<std::size_t>(g.length),
                      std::vector<std::uint8_t>(static_cast<std::size_t>(g.batch), 0));
      for (std::int64_t b = 0; b < g.batch; ++b) {
        const BatchRow& row = batch_in.rows[static_cast<std::size_t>(b)];
        for (std::int64_t t = 0; t < row.input_len; ++t) {
          const std::size_t n = static_cast<std::size_t>(t * g.batch + b);
          g.inputs[n] = row.inputs[static_cast<std::size_t>(t)];
          g.targets[n] = row.targets[static_cast<std::size_t>(t)];
          g.active[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] = 1;
        }
      }
      return g;
    }
  };

  void init(const LmConfig& cfg, Rng& rng) {
    cfg_ = cfg;
    emb_.init(cfg.vocab, cfg.embed, rng);
    lstm_.resize(static_cast<std::size_t>(cfg.layers));
    for (std::int64_t l = 0; l < cfg.layers; ++l) {
      lstm_[static_cast<std::size_t>(l)].init(l == 0 ? cfg.embed : cfg.hidden,
                                              cfg.hidden, rng);
    }
    in_drop_.rate = cfg.dropout;
    out_drop_.assign(static_cast<std::size_t>(cfg.layers), Dropout<T>{});
    for (auto& d : out_drop_) d.rate = cfg.dropout;
  }

  void register_params(ParamSet<T>& ps) {
    emb_.register_params(ps, "embedding");
    for (std::size_t l = 0; l < lstm_.size(); ++l)
      lstm_[l].register_params(ps, "lstm" + std::to_string(l));
  }

  const LmConfig& config() const { return cfg_; }
  Embedding<T>& embedding() { return emb_; }
  LstmParams<T>& lstm_layer(std::int64_t l) {
    return lstm_[static_cast<std::size_t>(l)];
  }

  std::int64_t lstm_param_count() const {
    std::int64_t n = 0;
    for (const auto& p : lstm_) n += p.param_count();
    return n;
  }

  // Returns the top layer output (N x D, post-dropout); advances `state`.
  const NumArray<T>& forward(const Grid& grid, BatchState<T>& state, Mode mode,
                             Rng* dropout_rng) {
    grid_ = &grid;
    const std::int64_t n = grid.n();
    const bool train = mode == Mode::kTrain;

    emb_.forward(grid.inputs, x_emb_);
    in_drop_.forward(x_emb_, train, dropout_rng);

    layer_out_.resize(lstm_.size());
    step_cache_.resize(lstm_.size());
    const NumArray<T>* layer_in = &x_emb_;
    for (std::size_t l = 0; l < lstm_.size(); ++l) {
      auto& lp = lstm_[l];
      auto& out = layer_out_[l];
      if (out.size() != n * cfg_.hidden) out = NumArray<T>({n, cfg_.hidden});
      step_cache_[l].resize(static_cast<std::size_t>(grid.length));
      NumArray<T>& h = state.h[l];
      NumArray<T>& c = state.c[l];
      for (std::int64_t t = 0; t < grid.length; ++t) {
        const T* x_t = layer_in->data() + t * grid.batch * lp.input_dim;
        lstm_step_forward(lp, x_t, grid.batch, h, c,
                          grid.active[static_cast<std::size_t>(t)], h, c,
                          step_cache_[l][static_cast<std::size_t>(t)]);
        out.mat(n, cfg_.hidden)
            .middleRows(t * grid.batch, grid.batch) = h.mat();
      }
      out_drop_[l].forward(out, train, dropout_rng);
      layer_in = &out;
    }
    return layer_out_.back();
  }

  // d_top: gradient on the forward() result. Accumulates into all grads.
  void backward(NumArray<T>& d_top) {
    const Grid& grid = *grid_;
    const std::int64_t n = grid.n();

    NumArray<T>* d_out = &d_top;  // gradient on layer_out_[l] (post-dropout)
    NumArray<T> d_in;
    for (std::size_t li = lstm_.size(); li-- > 0;) {
      auto& lp = lstm_[li];
      out_drop_[li].backward(*d_out);  // now gradient on raw LSTM outputs
      if (d_in.size() != n * lp.input_dim)
        d_in = NumArray<T>({n, lp.input_dim});
      d_in.set_zero();
      NumArray<T> d_h({grid.batch, cfg_.hidden});
      NumArray<T> d_c({grid.batch, cfg_.hidden});
      const NumArray<T>* layer_in = li == 0 ? &x_emb_ : &layer_out_[li - 1];
      for (std::int64_t t = grid.length - 1; t >= 0; --t) {
        d_h.mat().noalias() +=
            d_out->mat(n, cfg_.hidden).middleRows(t * grid.batch, grid.batch);
        const T* x_t = layer_in->data() + t * grid.batch * lp.input_dim;
        T* dx_t = d_in.data() + t * grid.batch * lp.input_dim;
        lstm_step_backward(lp, x_t, step_cache_[li][static_cast<std::size_t>(t)],
                           d_h, d_c, dx_t);
      }
      // Carryover into this window is detached; d_h/d_c stop here.
      if (li == 0) {
        in_drop_.backward(d_in);
        emb_.backward(d_in);
      } else {
        scratch_ = std::move(d_in);
        d_out = &scratch_;
        d_in = NumArray<T>();
      }
    }
  }

 private:
  LmConfig cfg_;
  Embedding<T> emb_;
  std::vector<LstmParams<T>> lstm_;
  Dropout<T> in_drop_;
  std::vector<Dropout<T>> out_drop_;

  const Grid* grid_ = nullptr;
  NumArray<T> x_emb_;
  std::vector<NumArray<T>> layer_out_;
  std::vector<std::vector<LstmStepCache<T>>> step_cache_;
  NumArray<T> scratch_;
};

struct WindowStats {
  double loss_sum = 0.0;  // objective value * number of targets
  std::int64_t targets = 0;
};

struct TrainCtx {
  Rng* dropout = nullptr;
  Rng* sampler = nullptr;
};

// Common surface the trainer and evaluator drive. LDA is not a sequence
// model and lives outside this hierarchy.
template <typename T>
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual ModelKind kind() const = 0;
  virtual const LmConfig& lm_config() const = 0;
  virtual ParamSet<T>& params() = 0;

  // Forward + backward on one batch window; accumulates gradients of the
  // per-target mean objective. Carryover states must already be prepared.
  virtual WindowStats train_window(const SequenceBatch& batch,
                                   BatchState<T>& state, TrainCtx& ctx) = 0;

  // Strictly causal per-target log-probabilities for one document,
  // evaluation mode. window_n controls the topic-estimate refresh cadence
  // for topic-guided models; plain LSTMs ignore it.
  virtual std::vector<double> predict_doc(const Document& doc,
                                          std::int64_t window_n) = 0;

  // Full next-word log-distribution at every predicting position. Test and
  // diagnostics surface; O(T * V) memory.
  virtual std::vector<std::vector<double>> predict_doc_distributions(
      const Document& doc, std::int64_t window_n) = 0;

  virtual void save(const std::string& path,
                    const std::map<std::string, std::string>& extra_config) = 0;
};

// Plain LSTM language model (document- or sentence-level conditioning),
// optionally with a per-position GRU transform between the LSTM output and
// the projection. The GRU head input is a zero vector of gru_input_dim.
template <typename T>
class LstmLm : public SequenceModel<T> {
 public:
  LstmLm(const LmConfig& cfg, Rng init_rng) {
    TGLM_CHECK_ARG(cfg.vocab >= 2, "LstmLm: vocabulary too small");
    TGLM_CHECK_ARG(cfg.dropout >= 0.0 && cfg.dropout < 1.0,
                   "LstmLm: dropout out of [0, 1)");
    cfg_ = cfg;
    Rng rng = init_rng.stream("init");
    backbone_.init(cfg_, rng);
    if (cfg_.with_gru_head) gru_.init(cfg_.gru_input_dim, cfg_.hidden, rng);
    w_out_ = NumArray<T>({cfg_.hidden, cfg_.vocab});
    w_out_grad_ = NumArray<T>({cfg_.hidden, cfg_.vocab});
    rng.fill_uniform(w_out_, -0.1, 0.1);
    backbone_.register_params(params_);
    if (cfg_.with_gru_head) gru_.register_params(params_, "gru_head");
    params_.add("W_out", &w_out_, &w_out_grad_);
  }

  ModelKind kind() const override { return ModelKind::kLstmLm; }
  const LmConfig& lm_config() const override { return cfg_; }
  ParamSet<T>& params() override { return params_; }
  LstmBackbone<T>& backbone() { return backbone_; }
  NumArray<T>& output_weights() { return w_out_; }
  GruParams<T>& gru_head() { return gru_; }

  // LSTM gates plus the optional GRU head; embeddings and the projection
  // are excluded, matching the closed-form gate arithmetic.
  std::int64_t param_count_excluding_embeddings() const {
    std::int64_t n = backbone_.lstm_param_count();
    if (cfg_.with_gru_head) n += gru_.param_count();
    return n;
  }

  WindowStats train_window(const SequenceBatch& batch, BatchState<T>& state,
                           TrainCtx& ctx) override {
    const auto grid = LstmBackbone<T>::Grid::from(batch);
    const NumArray<T>& top =
        backbone_.forward(grid, state, Mode::kTrain, ctx.dropout);
    const NumArray<T>* head = &top;
    if (cfg_.with_gru_head) {
      zero_in_ = NumArray<T>({grid.n(), std::max<std::int64_t>(cfg_.gru_input_dim, 0)});
      gru_forward(gru_, zero_in_, top, gru_out_, gru_cache_);
      head = &gru_out_;
    }

    WindowStats stats = cross_entropy(grid, *head, logits_, d_logits_);
    if (stats.targets == 0) return stats;

    // Grads of the mean per-target loss.
    d_logits_.vec() *= static_cast<T>(1.0 / static_cast<double>(stats.targets));
    NumArray<T> d_head({grid.n(), cfg_.hidden});
    w_out_grad_.mat().noalias() +=
        head->mat(grid.n(), cfg_.hidden).transpose() *
        d_logits_.mat(grid.n(), cfg_.vocab);
    d_head.mat().noalias() =
        d_logits_.mat(grid.n(), cfg_.vocab) * w_out_.mat().transpose();

    if (cfg_.with_gru_head) {
      NumArray<T> d_zero({grid.n(), std::max<std::int64_t>(cfg_.gru_input_dim, 0)});
      NumArray<T> d_top({grid.n(), cfg_.hidden});
      d_top.set_zero();
      gru_backward(gru_, gru_cache_, d_head, d_zero, d_top);
      backbone_.backward(d_top);
    } else {
      backbone_.backward(d_head);
    }
    return stats;
  }

  std::vector<double> predict_doc(const Document& doc,
                                  std::int64_t /*window_n*/) override {
    std::vector<Document> single{doc};
    SequenceBatcher batcher(&single, 30, 1, cfg_.conditioning, 1);
    BatchState<T> state;
    state.reset(1, cfg_.layers, cfg_.hidden);
    std::vector<double> out;
    while (auto batch = batcher.next()) {
      prepare_states(*batch, state);
      const auto grid = LstmBackbone<T>::Grid::from(*batch);
      const NumArray<T>& top =
          backbone_.forward(grid, state, Mode::kEval, nullptr);
      const NumArray<T>* head = &top;
      if (cfg_.with_gru_head) {
        zero_in_ = NumArray<T>({grid.n(), std::max<std::int64_t>(cfg_.gru_input_dim, 0)});
        gru_forward(gru_, zero_in_, top, gru_out_, gru_cache_);
        head = &gru_out_;
      }
      append_log_probs(grid, *head, out);
    }
    return out;
  }

  std::vector<std::vector<double>> predict_doc_distributions(
      const Document& doc, std::int64_t /*window_n*/) override {
    std::vector<Document> single{doc};
    SequenceBatcher batcher(&single, 30, 1, cfg_.conditioning, 1);
    BatchState<T> state;
    state.reset(1, cfg_.layers, cfg_.hidden);
    std::vector<std::vector<double>> out;
    while (auto batch = batcher.next()) {
      prepare_states(*batch, state);
      const auto grid = LstmBackbone<T>::Grid::from(*batch);
      const NumArray<T>& top =
          backbone_.forward(grid, state, Mode::kEval, nullptr);
      const NumArray<T>* head = &top;
      if (cfg_.with_gru_head) {
        zero_in_ = NumArray<T>({grid.n(), std::max<std::int64_t>(cfg_.gru_input_dim, 0)});
        gru_forward(gru_, zero_in_, top, gru_out_, gru_cache_);
        head = &gru_out_;
      }
      const std::int64_t n = grid.n();
      if (logits_.size() != n * cfg_.vocab) logits_ = NumArray<T>({n, cfg_.vocab});
      logits_.mat().noalias() = head->mat(n, cfg_.hidden) * w_out_.mat();
      for (std::int64_t i = 0; i < n; ++i) {
        if (grid.targets[static_cast<std::size_t>(i)] < 0) continue;
        auto row = logits_.mat().row(i);
        const T mx = row.maxCoeff();
        double z = 0.0;
        for (std::int64_t v = 0; v < cfg_.vocab; ++v)
          z += std::exp(static_cast<double>(row[v] - mx));
        const double log_z = static_cast<double>(mx) + std::log(z);
        std::vector<double> dist(static_cast<std::size_t>(cfg_.vocab));
        for (std::int64_t v = 0; v < cfg_.vocab; ++v)
          dist[static_cast<std::size_t>(v)] = static_cast<double>(row[v]) - log_z;
        out.push_back(std::move(dist));
      }
    }
    return out;
  }

  // Top-layer hidden states before consuming positions 0, chunk, 2*chunk, ...
  // of the document (document-level conditioning, eval mode).
  std::vector<std::vector<T>> hidden_states_at_chunks(const Document& doc,
                                                      std::int64_t chunk) {
    std::vector<Document> single{doc};
    SequenceBatcher batcher(&single, chunk, 1, Conditioning::kDocument, 1);
    BatchState<T> state;
    state.reset(1, cfg_.layers, cfg_.hidden);
    std::vector<std::vector<T>> states;
    while (auto batch = batcher.next()) {
      if (batch->rows[0].doc_id < 0) break;
      prepare_states(*batch, state);
      // State *before* this window = state at the chunk start.
      const auto& h = state.h[static_cast<std::size_t>(cfg_.layers - 1)];
      states.emplace_back(h.data(), h.data() + cfg_.hidden);
      const auto grid = LstmBackbone<T>::Grid::from(*batch);
      backbone_.forward(grid, state, Mode::kEval, nullptr);
    }
    return states;
  }

  void save(const std::string& path,
            const std::map<std::string, std::string>& extra_config) override {
    auto kv = extra_config;
    kv["model"] = model_kind_name(kind());
    kv["vocab"] = std::to_string(cfg_.vocab);
    kv["layers"] = std::to_string(cfg_.layers);
    kv["hidden"] = std::to_string(cfg_.hidden);
    kv["embed"] = std::to_string(cfg_.embed);
    kv["dropout"] = std::to_string(cfg_.dropout);
    kv["with_gru_head"] = cfg_.with_gru_head ? "1" : "0";
    kv["gru_input_dim"] = std::to_string(cfg_.gru_input_dim);
    kv["conditioning"] =
        cfg_.conditioning == Conditioning::kDocument ? "document" : "sentence";
    CheckpointWriter w(path, kind(), render_kv_blob(kv));
    w.add_params(params_);
    w.finish();
  }

  static LmConfig config_from_blob(const std::map<std::string, std::string>& kv) {
    LmConfig cfg;
    cfg.vocab = std::stoll(kv.at("vocab"));
    cfg.layers = std::stoll(kv.at("layers"));
    cfg.hidden = std::stoll(kv.at("hidden"));
    cfg.embed = std::stoll(kv.at("embed"));
    cfg.dropout = std::stod(kv.at("dropout"));
    cfg.with_gru_head = kv.at("with_gru_head") == "1";
    cfg.gru_input_dim = std::stoll(kv.at("gru_input_dim"));
    cfg.conditioning = kv.at("conditioning") == "sentence"
                           ? Conditioning::kSentence
                           : Conditioning::kDocument;
    return cfg;
  }

 protected:
  // Masked cross entropy over the grid; fills logits and d_logits (softmax
  // minus one-hot, zero on masked positions).
  WindowStats cross_entropy(const typename LstmBackbone<T>::Grid& grid,
                            const NumArray<T>& head, NumArray<T>& logits,
                            NumArray<T>& d_logits) {
    const std::int64_t n = grid.n();
    if (logits.size() != n * cfg_.vocab) logits = NumArray<T>({n, cfg_.vocab});
    logits.mat().noalias() = head.mat(n, cfg_.hidden) * w_out_.mat();
    if (d_logits.size() != logits.size()) d_logits = NumArray<T>(logits.shape());
    d_logits.set_zero();
    WindowStats stats;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int32_t target = grid.targets[static_cast<std::size_t>(i)];
      if (target < 0) continue;
      auto row = logits.mat().row(i);
      const T mx = row.maxCoeff();
      double z = 0.0;
      for (std::int64_t v = 0; v < cfg_.vocab; ++v)
        z += std::exp(static_cast<double>(row[v] - mx));
      const double log_z = static_cast<double>(mx) + std::log(z);
      stats.loss_sum += log_z - static_cast<double>(row[target]);
      ++stats.targets;
      auto d_row = d_logits.mat().row(i);
      for (std::int64_t v = 0; v < cfg_.vocab; ++v)
        d_row[v] = static_cast<T>(
            std::exp(static_cast<double>(row[v]) - log_z));
      d_row[target] -= T(1);
    }
    return stats;
  }

  void append_log_probs(const typename LstmBackbone<T>::Grid& grid,
                        const NumArray<T>& head, std::vector<double>& out) {
    const std::int64_t n = grid.n();
    if (logits_.size() != n * cfg_.vocab) logits_ = NumArray<T>({n, cfg_.vocab});
    logits_.mat().noalias() = head.mat(n, cfg_.hidden) * w_out_.mat();
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int32_t target = grid.targets[static_cast<std::size_t>(i)];
      if (target < 0) continue;
      auto row = logits_.mat().row(i);
      const T mx = row.maxCoeff();
      double z = 0.0;
      for (std::int64_t v = 0; v < cfg_.vocab; ++v)
        z += std::exp(static_cast<double>(row[v] - mx));
      out.push_back(static_cast<double>(row[target]) -
                    (static_cast<double>(mx) + std::log(z)));
    }
  }

  LmConfig cfg_;
  LstmBackbone<T> backbone_;
  GruParams<T> gru_;
  GruCache<T> gru_cache_;
  NumArray<T> gru_out_;
  NumArray<T> zero_in_;
  NumArray<T> w_out_;
  NumArray<T> w_out_grad_;
  NumArray<T> logits_;
  NumArray<T> d_logits_;
  ParamSet<T> params_;
};

}  // namespace tglm
