#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "tglm/grad_check.hpp"
#include "tglm/lm.hpp"
#include "tglm/optimizer.hpp"
#include "tglm/trainer.hpp"

namespace tglm {
namespace {

// Straight-line scalar transcription of the LSTM equations, the independent
// oracle for the vectorized implementation.
struct ScalarLstmRef {
  std::vector<double> h, c;

  static double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  void step(const LstmParams<double>& p, const std::vector<double>& v) {
    const std::int64_t d = p.hidden_dim;
    std::vector<double> a[4];
    for (int g = 0; g < 4; ++g) {
      a[g].assign(static_cast<std::size_t>(d), 0.0);
      for (std::int64_t r = 0; r < d; ++r) {
        double s = p.b[g][r];
        for (std::int64_t j = 0; j < p.input_dim; ++j)
          s += p.w[g].at(r, j) * v[static_cast<std::size_t>(j)];
        for (std::int64_t j = 0; j < d; ++j)
          s += p.u[g].at(r, j) * h[static_cast<std::size_t>(j)];
        a[g][static_cast<std::size_t>(r)] = s;
      }
    }
    for (std::int64_t r = 0; r < d; ++r) {
      const double i_t = sigm(a[0][static_cast<std::size_t>(r)]);
      const double f_t = sigm(a[1][static_cast<std::size_t>(r)]);
      const double o_t = sigm(a[2][static_cast<std::size_t>(r)]);
      const double c_hat = std::tanh(a[3][static_cast<std::size_t>(r)]);
      c[static_cast<std::size_t>(r)] = f_t * c[static_cast<std::size_t>(r)] + i_t * c_hat;
      h[static_cast<std::size_t>(r)] = o_t * std::tanh(c[static_cast<std::size_t>(r)]);
    }
  }
};

TEST(LstmCell, ZeroWeightsZeroStateFixedPoint) {
  LstmParams<double> p;
  Rng rng(1);
  p.init(3, 4, rng);
  for (int g = 0; g < 4; ++g) {
    p.w[g].set_zero();
    p.u[g].set_zero();
    p.b[g].set_zero();
  }
  NumArray<double> x = NumArray<double>::from({1, 3}, {0.7, -1.2, 3.0});
  NumArray<double> h({1, 4}), c({1, 4});
  NumArray<double> h_out({1, 4}), c_out({1, 4});
  LstmStepCache<double> cache;
  lstm_step_forward(p, x.data(), 1, h, c, {1}, h_out, c_out, cache);
  for (std::int64_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(h_out[i], 0.0);
}

TEST(LstmCell, MatchesScalarTranscription) {
  Rng rng(21);
  LstmParams<double> p;
  p.init(2, 3, rng);
  std::vector<double> v = {0.3, -0.9};
  ScalarLstmRef ref;
  ref.h = {0.1, -0.2, 0.05};
  ref.c = {0.4, 0.0, -0.6};

  NumArray<double> x = NumArray<double>::from({1, 2}, {v[0], v[1]});
  NumArray<double> h = NumArray<double>::from({1, 3}, {ref.h[0], ref.h[1], ref.h[2]});
  NumArray<double> c = NumArray<double>::from({1, 3}, {ref.c[0], ref.c[1], ref.c[2]});
  NumArray<double> h_out({1, 3}), c_out({1, 3});
  LstmStepCache<double> cache;

  for (int steps = 0; steps < 3; ++steps) {
    ref.step(p, v);
    lstm_step_forward(p, x.data(), 1, h, c, {1}, h_out, c_out, cache);
    for (std::int64_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(h_out[i], ref.h[static_cast<std::size_t>(i)], 1e-12);
      EXPECT_NEAR(c_out[i], ref.c[static_cast<std::size_t>(i)], 1e-12);
    }
    h = h_out;
    c = c_out;
  }
}

TEST(LstmCell, GradCheckThroughOneCell) {
  Rng rng(33);
  LstmParams<double> p;
  p.init(4, 4, rng);
  NumArray<double> x({1, 4});
  rng.fill_uniform(x, -1.0, 1.0);
  NumArray<double> h0({1, 4}), c0({1, 4});
  rng.fill_uniform(h0, -0.5, 0.5);
  rng.fill_uniform(c0, -0.5, 0.5);
  // Loss: 0.5 * ||h_out||^2; dL/dh_out = h_out.
  ParamSet<double> ps;
  p.register_params(ps, "cell");
  auto loss = [&](bool want_grad) {
    NumArray<double> h_out({1, 4}), c_out({1, 4});
    LstmStepCache<double> cache;
    lstm_step_forward(p, x.data(), 1, h0, c0, {1}, h_out, c_out, cache);
    double l = 0.0;
    for (std::int64_t i = 0; i < 4; ++i) l += 0.5 * h_out[i] * h_out[i];
    if (want_grad) {
      ps.zero_grads();
      NumArray<double> d_h = h_out;
      NumArray<double> d_c({1, 4});
      NumArray<double> d_x({1, 4});
      lstm_step_backward(p, x.data(), cache, d_h, d_c, d_x.data());
    }
    return l;
  };
  GradCheckOptions opt;
  opt.eps = 1e-5;
  EXPECT_LE(grad_check<double>(loss, ps, opt), 1e-6);
}

TEST(GruCell, ForcedUpdateGateCarriesOrReplaces) {
  Rng rng(5);
  GruParams<double> p;
  p.init(2, 3, rng);
  NumArray<double> x = NumArray<double>::from({1, 2}, {0.4, -0.2});
  NumArray<double> h = NumArray<double>::from({1, 3}, {0.3, -0.5, 0.9});
  NumArray<double> out({1, 3});
  GruCache<double> cache;

  p.b[0].vec().setConstant(-1e4);  // z -> 0: h' = h
  gru_forward(p, x, h, out, cache);
  for (std::int64_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], h[i], 1e-12);

  p.b[0].vec().setConstant(1e4);  // z -> 1: h' = h_hat
  gru_forward(p, x, h, out, cache);
  for (std::int64_t i = 0; i < 3; ++i)
    EXPECT_NEAR(out[i], cache.h_hat[i], 1e-12);
}

TEST(GruCell, MatchesScalarTranscription) {
  Rng rng(8);
  GruParams<double> p;
  p.init(3, 2, rng);
  const std::vector<double> v = {0.2, -0.7, 1.1};
  const std::vector<double> h = {0.5, -0.1};

  auto sigm = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  std::vector<double> z(2), r(2), hh(2), expect(2);
  for (int i = 0; i < 2; ++i) {
    double az = p.b[0][i], ar = p.b[1][i];
    for (int j = 0; j < 3; ++j) {
      az += p.w[0].at(i, j) * v[static_cast<std::size_t>(j)];
      ar += p.w[1].at(i, j) * v[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < 2; ++j) {
      az += p.u[0].at(i, j) * h[static_cast<std::size_t>(j)];
      ar += p.u[1].at(i, j) * h[static_cast<std::size_t>(j)];
    }
    z[static_cast<std::size_t>(i)] = sigm(az);
    r[static_cast<std::size_t>(i)] = sigm(ar);
  }
  for (int i = 0; i < 2; ++i) {
    double ah = p.b[2][i];
    for (int j = 0; j < 3; ++j) ah += p.w[2].at(i, j) * v[static_cast<std::size_t>(j)];
    for (int j = 0; j < 2; ++j)
      ah += p.u[2].at(i, j) * (r[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(j)]);
    hh[static_cast<std::size_t>(i)] = std::tanh(ah);
    expect[static_cast<std::size_t>(i)] =
        (1.0 - z[static_cast<std::size_t>(i)]) * h[static_cast<std::size_t>(i)] +
        z[static_cast<std::size_t>(i)] * hh[static_cast<std::size_t>(i)];
  }

  NumArray<double> xa = NumArray<double>::from({1, 3}, {v[0], v[1], v[2]});
  NumArray<double> ha = NumArray<double>::from({1, 2}, {h[0], h[1]});
  NumArray<double> out({1, 2});
  GruCache<double> cache;
  gru_forward(p, xa, ha, out, cache);
  for (std::int64_t i = 0; i < 2; ++i)
    EXPECT_NEAR(out[i], expect[static_cast<std::size_t>(i)], 1e-12);
}

TEST(GruCell, GradCheck) {
  Rng rng(44);
  GruParams<double> p;
  p.init(3, 3, rng);
  NumArray<double> x({2, 3}), h({2, 3});
  rng.fill_uniform(x, -1.0, 1.0);
  rng.fill_uniform(h, -0.5, 0.5);
  ParamSet<double> ps;
  p.register_params(ps, "gru");
  auto loss = [&](bool want_grad) {
    NumArray<double> out({2, 3});
    GruCache<double> cache;
    gru_forward(p, x, h, out, cache);
    double l = 0.0;
    for (std::int64_t i = 0; i < out.size(); ++i) l += 0.5 * out[i] * out[i];
    if (want_grad) {
      ps.zero_grads();
      NumArray<double> d_x({2, 3}), d_h({2, 3});
      gru_backward(p, cache, out, d_x, d_h);
    }
    return l;
  };
  GradCheckOptions opt;
  opt.eps = 1e-5;
  EXPECT_LE(grad_check<double>(loss, ps, opt), 1e-6);
}

Document make_doc(std::vector<std::int32_t> ids, std::int32_t doc_id = 0) {
  Document d;
  d.token_ids = std::move(ids);
  d.doc_id = doc_id;
  d.sentence_spans.emplace_back(0, static_cast<std::int32_t>(d.token_ids.size()));
  return d;
}

LmConfig tiny_config(std::int64_t vocab, std::int64_t hidden = 5,
                     std::int64_t embed = 4) {
  LmConfig cfg;
  cfg.vocab = vocab;
  cfg.hidden = hidden;
  cfg.embed = embed;
  cfg.dropout = 0.0;
  return cfg;
}

TEST(LmStep, ZeroOutputWeightsGiveUniform) {
  LmConfig cfg = tiny_config(2);
  LstmLm<double> model(cfg, Rng(3));
  model.output_weights().set_zero();
  const auto lps = model.predict_doc(make_doc({1, 0, 0, 2}), 0);
  ASSERT_EQ(lps.size(), 3u);
  for (double lp : lps) EXPECT_NEAR(lp, std::log(0.5), 1e-12);
}

TEST(LmStep, EvalIsDeterministic) {
  LmConfig cfg = tiny_config(7);
  cfg.dropout = 0.4;  // must not fire at eval
  LstmLm<float> model(cfg, Rng(5));
  const Document doc = make_doc({1, 3, 4, 5, 6, 3, 2});
  const auto a = model.predict_doc(doc, 0);
  const auto b = model.predict_doc(doc, 0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(LmStep, MatchesManualSingleStepUnroll) {
  LmConfig cfg = tiny_config(6, 4, 3);
  LstmLm<double> model(cfg, Rng(17));
  const Document doc = make_doc({1, 4, 3, 5});
  const auto lps = model.predict_doc(doc, 0);
  ASSERT_EQ(lps.size(), 3u);

  // Manual unroll: thread state through single cell calls by hand.
  auto& emb = model.backbone().embedding();
  auto& cell = model.backbone().lstm_layer(0);
  NumArray<double> h({1, 4}), c({1, 4});
  double total = 0.0;
  for (int t = 0; t + 1 < 4; ++t) {
    NumArray<double> x({1, 3});
    for (int j = 0; j < 3; ++j)
      x[j] = emb.weight.at(doc.token_ids[static_cast<std::size_t>(t)], j);
    NumArray<double> h_out({1, 4}), c_out({1, 4});
    LstmStepCache<double> cache;
    lstm_step_forward(cell, x.data(), 1, h, c, {1}, h_out, c_out, cache);
    h = h_out;
    c = c_out;
    NumArray<double> logits({6});
    logits.vec().noalias() =
        model.output_weights().mat().transpose() * h.vec();
    const double lse = log_sum_exp(logits);
    total += logits[doc.token_ids[static_cast<std::size_t>(t + 1)]] - lse;
  }
  double sum = 0.0;
  for (double lp : lps) sum += lp;
  EXPECT_NEAR(sum, total, 1e-10);
}

TEST(LmStep, PerPositionDistributionsNormalize) {
  LmConfig cfg = tiny_config(9, 6, 4);
  LstmLm<float> model(cfg, Rng(23));
  const auto dists = model.predict_doc_distributions(make_doc({1, 3, 4, 5, 2}), 0);
  ASSERT_EQ(dists.size(), 4u);
  for (const auto& d : dists) {
    double z = 0.0;
    for (double lp : d) z += std::exp(lp);
    EXPECT_NEAR(std::log(z), 0.0, 1e-6);
  }
}

TEST(LstmLm, GradCheckFullObjective) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    LmConfig cfg = tiny_config(8, 5, 4);
    cfg.dropout = 0.3;
    LstmLm<double> model(cfg, Rng(seed));
    std::vector<Document> docs{make_doc({1, 3, 4, 5, 6, 7, 3, 4, 2})};
    SequenceBatcher batcher(&docs, 4, 1, Conditioning::kDocument, 1);
    const auto batch = *batcher.next();  // first window only

    auto loss = [&](bool) {
      model.params().zero_grads();
      BatchState<double> state;
      state.reset(1, cfg.layers, cfg.hidden);
      prepare_states(batch, state);
      Rng dropout_rng(99);  // frozen noise
      TrainCtx ctx{&dropout_rng, nullptr};
      const auto stats = model.train_window(batch, state, ctx);
      return stats.loss_sum / static_cast<double>(stats.targets);
    };
    GradCheckOptions opt;
    opt.eps = 1e-5;
    opt.max_coords_per_tensor = 12;
    EXPECT_LE(grad_check<double>(loss, model.params(), opt), 1e-6)
        << "seed " << seed;
  }
}

TEST(LstmLm, GruHeadGradCheck) {
  for (std::uint64_t seed : {4ull, 5ull, 6ull}) {
    LmConfig cfg = tiny_config(7, 4, 3);
    cfg.with_gru_head = true;
    cfg.gru_input_dim = 3;
    LstmLm<double> model(cfg, Rng(seed));
    std::vector<Document> docs{make_doc({1, 3, 4, 5, 6, 2})};
    SequenceBatcher batcher(&docs, 6, 1, Conditioning::kDocument, 1);
    const auto batch = *batcher.next();
    auto loss = [&](bool) {
      model.params().zero_grads();
      BatchState<double> state;
      state.reset(1, cfg.layers, cfg.hidden);
      prepare_states(batch, state);
      TrainCtx ctx{nullptr, nullptr};
      const auto stats = model.train_window(batch, state, ctx);
      return stats.loss_sum / static_cast<double>(stats.targets);
    };
    GradCheckOptions opt;
    opt.eps = 1e-5;
    opt.max_coords_per_tensor = 10;
    EXPECT_LE(grad_check<double>(loss, model.params(), opt), 1e-6);
  }
}

TEST(LstmLm, GradientStoppingAcrossWindows) {
  // Threaded two-window run must produce the same gradients as running the
  // second window with the carried state injected as a constant.
  LmConfig cfg = tiny_config(8, 4, 3);
  cfg.dropout = 0.2;
  LstmLm<float> model(cfg, Rng(7));
  std::vector<Document> docs{make_doc({1, 3, 4, 5, 6, 7, 3, 2})};
  SequenceBatcher batcher(&docs, 4, 1, Conditioning::kDocument, 1);
  const auto w1 = *batcher.next();
  const auto w2 = *batcher.next();
  ASSERT_TRUE(w2.rows[0].carryover);

  // Run A: threaded.
  model.params().zero_grads();
  BatchState<float> state;
  state.reset(1, cfg.layers, cfg.hidden);
  Rng drop_a(42);
  TrainCtx ctx_a{&drop_a, nullptr};
  prepare_states(w1, state);
  model.train_window(w1, state, ctx_a);
  const NumArray<float> carried_h = state.h[0];
  const NumArray<float> carried_c = state.c[0];
  prepare_states(w2, state);
  model.train_window(w2, state, ctx_a);
  std::vector<std::vector<float>> grads_a;
  for (const auto& r : model.params().refs())
    grads_a.emplace_back(r.grad->data(), r.grad->data() + r.grad->size());

  // Run B: same but window 2 starts from an externally injected constant
  // equal to the carried state.
  model.params().zero_grads();
  BatchState<float> state_b;
  state_b.reset(1, cfg.layers, cfg.hidden);
  Rng drop_b(42);
  TrainCtx ctx_b{&drop_b, nullptr};
  prepare_states(w1, state_b);
  model.train_window(w1, state_b, ctx_b);
  state_b.h[0] = carried_h;  // constant injection
  state_b.c[0] = carried_c;
  prepare_states(w2, state_b);
  model.train_window(w2, state_b, ctx_b);

  std::size_t i = 0;
  for (const auto& r : model.params().refs()) {
    for (std::int64_t j = 0; j < r.grad->size(); ++j)
      ASSERT_EQ((*r.grad)[j], grads_a[i][static_cast<std::size_t>(j)])
          << r.name << "[" << j << "]";
    ++i;
  }
}

TEST(LstmLm, SentenceModeIgnoresPriorSentences) {
  LmConfig cfg = tiny_config(9, 5, 4);
  cfg.conditioning = Conditioning::kSentence;
  LstmLm<float> model(cfg, Rng(11));

  Document a;
  a.token_ids = {1, 3, 4, 5, 6, 7, 8, 2};
  a.sentence_spans = {{0, 4}, {4, 8}};
  Document b = a;
  b.token_ids[1] = 6;  // mutate sentence 0
  b.token_ids[2] = 3;

  const auto lp_a = model.predict_doc(a, 0);
  const auto lp_b = model.predict_doc(b, 0);
  ASSERT_EQ(lp_a.size(), lp_b.size());
  // Targets of sentence 1 occupy positions 4..7 -> flat indices 3..6.
  for (std::size_t i = 3; i < lp_a.size(); ++i)
    EXPECT_EQ(lp_a[i], lp_b[i]) << "position " << i;
  EXPECT_NE(lp_a[0], lp_b[0]);  // sentence 0 did change
}

TEST(LstmLm, ParameterCountClosedForm) {
  LmConfig cfg;
  cfg.vocab = 100;
  cfg.layers = 1;
  cfg.hidden = 600;
  cfg.embed = 300;
  LstmLm<float> model(cfg, Rng(1));
  const std::int64_t expected = 4 * (600 * 300 + 600 * 600 + 600);
  EXPECT_EQ(model.param_count_excluding_embeddings(), expected);
  EXPECT_NEAR(static_cast<double>(expected) / 1e6, 2.2, 0.05);
}

TEST(LstmLm, CheckpointRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "tglm_test_ckpt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "lm.ckpt").string();

  LmConfig cfg = tiny_config(12, 6, 5);
  cfg.with_gru_head = true;
  cfg.gru_input_dim = 2;
  LstmLm<float> model(cfg, Rng(9));
  model.save(path, {{"vocab_hash", "abc123"}});

  CheckpointReader reader(path);
  EXPECT_EQ(reader.kind(), ModelKind::kLstmLm);
  const auto kv = parse_kv_blob(reader.config_blob());
  EXPECT_EQ(kv.at("vocab_hash"), "abc123");
  LmConfig cfg2 = LstmLm<float>::config_from_blob(kv);
  EXPECT_EQ(cfg2.hidden, 6);
  EXPECT_TRUE(cfg2.with_gru_head);

  LstmLm<float> loaded(cfg2, Rng(1234));  // different init, then overwritten
  reader.load_params(loaded.params());
  const Document doc = make_doc({1, 3, 4, 5, 2});
  const auto a = model.predict_doc(doc, 0);
  const auto b = loaded.predict_doc(doc, 0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Optimizer, AdamConvergesOnQuadratic) {
  NumArray<float> x = NumArray<float>::from({1}, {1.0f});
  NumArray<float> g({1});
  ParamSet<float> ps;
  ps.add("x", &x, &g);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kAdam;
  cfg.lr = 0.001;
  Optimizer<float> opt(cfg, ps);
  for (int i = 0; i < 2000; ++i) {
    g[0] = 2.0f * x[0];
    opt.step(ps);
  }
  EXPECT_LT(std::abs(x[0]), 1e-3f);
}

TEST(Optimizer, SgdDecayRuleApplication) {
  ParamSet<float> ps;
  NumArray<float> x({1}), g({1});
  ps.add("x", &x, &g);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kSgdDecay;
  Optimizer<float> opt(cfg, ps);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 20.0);
  opt.on_validation(100.0);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 20.0);
  opt.on_validation(101.0);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 5.0);
}

TEST(Optimizer, ZeroGradientLeavesParamsUnchanged) {
  NumArray<float> x = NumArray<float>::from({2}, {1.5f, -2.5f});
  NumArray<float> g({2});
  ParamSet<float> ps;
  ps.add("x", &x, &g);
  OptimizerConfig cfg;
  Optimizer<float> opt(cfg, ps);
  for (int i = 0; i < 5; ++i) opt.step(ps);
  EXPECT_EQ(x[0], 1.5f);
  EXPECT_EQ(x[1], -2.5f);
}

TEST(Optimizer, NonFiniteGradientThrows) {
  NumArray<float> x({1}), g({1});
  g[0] = std::numeric_limits<float>::infinity();
  ParamSet<float> ps;
  ps.add("x", &x, &g);
  Optimizer<float> opt({}, ps);
  EXPECT_THROW(opt.step(ps), TrainingError);
}

TEST(Trainer, UntrainedPerplexityNearVocabulary) {
  // With near-zero random logits the model is near uniform.
  const std::int64_t v = 50;
  LmConfig cfg = tiny_config(v, 8, 6);
  LstmLm<float> model(cfg, Rng(3));
  std::vector<Document> docs;
  Rng rng(7);
  for (int d = 0; d < 5; ++d) {
    std::vector<std::int32_t> ids{1};
    for (int i = 0; i < 40; ++i)
      ids.push_back(static_cast<std::int32_t>(3 + rng.uniform_index(v - 3)));
    ids.push_back(2);
    docs.push_back(make_doc(ids, d));
  }
  const double ppl = corpus_perplexity(model, docs, 0);
  EXPECT_NEAR(ppl, static_cast<double>(v), 0.05 * static_cast<double>(v));
}

}  // namespace
}  // namespace tglm
