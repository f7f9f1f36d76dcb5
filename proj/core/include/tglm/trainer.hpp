#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tglm/batcher.hpp"
#include "tglm/checkpoint.hpp"
#include "tglm/lm.hpp"
#include "tglm/metrics.hpp"
#include "tglm/optimizer.hpp"

namespace tglm {

struct TrainOptions {
  std::int64_t max_epochs = 40;
  std::int64_t patience = 5;  // stop after this many non-improving epochs
  std::int64_t batch_size = 64;
  std::int64_t seq_len = 30;
  std::int64_t window_n = 30;  // topic refresh cadence during validation
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: keep everything in memory, write nothing
  std::string run_name = "model";
  bool resume = true;
  std::map<std::string, std::string> extra_config;
};

struct TrainResult {
  std::vector<double> val_ppl;
  double best_val_ppl = 0.0;
  std::int64_t best_epoch = -1;
  std::int64_t epochs_run = 0;
  std::string best_path;
};

// Pooled document-level perplexity with exact token accounting.
template <typename T>
double corpus_perplexity(SequenceModel<T>& model,
                         const std::vector<Document>& docs,
                         std::int64_t window_n) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& doc : docs) {
    const auto lps = model.predict_doc(doc, window_n);
    for (double lp : lps) sum += lp;
    count += static_cast<std::int64_t>(lps.size());
  }
  return perplexity_from_sum(sum, count);
}

// Epoch loop with stop-gradient hidden-state carryover, early stopping on
// validation perplexity, best-checkpoint retention, and epoch-granular
// resume. Per-epoch rng streams make a resumed run bit-identical to an
// uninterrupted one.
template <typename T>
TrainResult train_model(SequenceModel<T>& model,
                        const std::vector<Document>& train_docs,
                        const std::vector<Document>& valid_docs,
                        const TrainOptions& opt) {
  TGLM_CHECK_ARG(!train_docs.empty() && !valid_docs.empty(),
                 "train_model: corpus must have train and valid splits");
  Rng root(opt.seed);
  Optimizer<T> optimizer(opt.optimizer, model.params());
  const LmConfig& cfg = model.lm_config();

  SequenceBatcher batcher(&train_docs, opt.seq_len, opt.batch_size,
                          cfg.conditioning, 1);
  BatchState<T> state;

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t best_epoch = -1;
  std::int64_t bad_epochs = 0;
  std::int64_t start_epoch = 0;

  const bool persist = !opt.out_dir.empty();
  std::string best_path, state_path, log_path;
  if (persist) {
    std::filesystem::create_directories(opt.out_dir);
    best_path = opt.out_dir + "/" + opt.run_name + ".best.ckpt";
    state_path = opt.out_dir + "/" + opt.run_name + ".train_state.ckpt";
    log_path = opt.out_dir + "/" + opt.run_name + ".train_log.txt";
  }

  // Resume from the last epoch-end state if present.
  if (persist && opt.resume && std::filesystem::exists(state_path)) {
    CheckpointReader reader(state_path);
    reader.load_params(model.params());
    auto kv = parse_kv_blob(reader.config_blob());
    start_epoch = std::stoll(kv.at("next_epoch"));
    best = std::stod(kv.at("best_val_ppl"));
    best_epoch = std::stoll(kv.at("best_epoch"));
    bad_epochs = std::stoll(kv.at("bad_epochs"));
    optimizer.restore_schedule(std::stod(kv.at("lr")), std::stoll(kv.at("steps")),
                               std::stod(kv.at("prev_val")),
                               kv.at("has_prev") == "1");
    auto& m = optimizer.adam_m();
    auto& v = optimizer.adam_v();
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = reader.tensor<T>("adam.m." + std::to_string(i));
      v[i] = reader.tensor<T>("adam.v." + std::to_string(i));
    }
    const std::int64_t n_vals = std::stoll(kv.at("n_vals"));
    for (std::int64_t e = 0; e < n_vals; ++e)
      result.val_ppl.push_back(std::stod(kv.at("val_ppl." + std::to_string(e))));
  }

  for (std::int64_t epoch = start_epoch; epoch < opt.max_epochs; ++epoch) {
    Rng order_rng = root.stream("data-order/" + std::to_string(epoch));
    Rng dropout_rng = root.stream("dropout/" + std::to_string(epoch));
    Rng sampler_rng = root.stream("sampler/" + std::to_string(epoch));
    TrainCtx ctx{&dropout_rng, &sampler_rng};

    batcher.start_epoch(&order_rng);
    state.reset(opt.batch_size, cfg.layers, cfg.hidden);

    double loss_sum = 0.0;
    std::int64_t target_count = 0;
    while (auto batch = batcher.next()) {
      prepare_states(*batch, state);
      model.params().zero_grads();
      const WindowStats stats = model.train_window(*batch, state, ctx);
      if (stats.targets == 0) continue;
      optimizer.step(model.params());
      loss_sum += stats.loss_sum;
      target_count += stats.targets;
    }
    const double train_loss = loss_sum / static_cast<double>(target_count);

    const double val_ppl = corpus_perplexity(model, valid_docs, opt.window_n);
    if (!std::isfinite(val_ppl)) {
      throw TrainingError("train_model: validation perplexity diverged at epoch " +
                          std::to_string(epoch) + " (train loss " +
                          std::to_string(train_loss) + ")");
    }
    result.val_ppl.push_back(val_ppl);
    optimizer.on_validation(val_ppl);

    if (val_ppl < best) {
      best = val_ppl;
      best_epoch = epoch;
      bad_epochs = 0;
      if (persist) model.save(best_path, opt.extra_config);
    } else {
      ++bad_epochs;
    }

    if (persist) {
      std::ofstream log(log_path, std::ios::binary | std::ios::app);
      char line[160];
      std::snprintf(line, sizeof line,
                    "epoch %lld train_loss %.6f val_ppl %.6f lr %.6g\n",
                    static_cast<long long>(epoch), train_loss, val_ppl,
                    optimizer.learning_rate());
      log << line;

      std::map<std::string, std::string> kv = opt.extra_config;
      kv["next_epoch"] = std::to_string(epoch + 1);
      kv["best_val_ppl"] = std::to_string(best);
      kv["best_epoch"] = std::to_string(best_epoch);
      kv["bad_epochs"] = std::to_string(bad_epochs);
      char num[40];
      std::snprintf(num, sizeof num, "%.17g", optimizer.learning_rate());
      kv["lr"] = num;
      kv["steps"] = std::to_string(optimizer.steps());
      std::snprintf(num, sizeof num, "%.17g", optimizer.prev_validation());
      kv["prev_val"] = num;
      kv["has_prev"] = optimizer.has_prev_validation() ? "1" : "0";
      kv["n_vals"] = std::to_string(result.val_ppl.size());
      for (std::size_t e = 0; e < result.val_ppl.size(); ++e) {
        std::snprintf(num, sizeof num, "%.17g", result.val_ppl[e]);
        kv["val_ppl." + std::to_string(e)] = num;
      }
      CheckpointWriter writer(state_path, model.kind(), render_kv_blob(kv));
      writer.add_params(model.params());
      auto& m = optimizer.adam_m();
      auto& v = optimizer.adam_v();
      for (std::size_t i = 0; i < m.size(); ++i) {
        writer.add("adam.m." + std::to_string(i), m[i]);
        writer.add("adam.v." + std::to_string(i), v[i]);
      }
      writer.finish();
    }

    result.epochs_run = epoch + 1;
    if (bad_epochs >= opt.patience) break;
  }

  result.best_val_ppl = best;
  result.best_epoch = best_epoch;
  result.best_path = best_path;
  // Leave the model at its best-validation parameters.
  if (persist && best_epoch >= 0) {
    CheckpointReader reader(best_path);
    reader.load_params(model.params());
  }
  return result;
}

}  // namespace tglm
