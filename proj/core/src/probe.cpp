#include "tglm/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "tglm/error.hpp"

namespace tglm {

std::vector<double> inverse_softmax(const std::vector<double>& theta) {
  std::vector<double> out(theta.size());
  double log_sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double clamped = std::max(theta[i], 1e-10);
    out[i] = std::log(clamped);
    log_sum += out[i];
  }
  for (auto& v : out) v -= log_sum;
  return out;
}

std::vector<double> LinearProbe::predict(const std::vector<float>& h) const {
  std::vector<double> y(weight.size());
  for (std::size_t k = 0; k < weight.size(); ++k) {
    double s = bias[k];
    const auto& row = weight[k];
    for (std::size_t d = 0; d < row.size(); ++d)
      s += row[d] * static_cast<double>(h[d]);
    y[k] = s;
  }
  return y;
}

namespace {

// Design matrix with a trailing 1 for the (unpenalized) bias column.
Eigen::MatrixXd design_matrix(const std::vector<ProbeExample>& ex) {
  const auto n = static_cast<Eigen::Index>(ex.size());
  const auto d = static_cast<Eigen::Index>(ex[0].hidden.size());
  Eigen::MatrixXd x(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      x(i, j) = static_cast<double>(ex[static_cast<std::size_t>(i)].hidden[static_cast<std::size_t>(j)]);
    x(i, d) = 1.0;
  }
  return x;
}

Eigen::MatrixXd target_matrix(const std::vector<ProbeExample>& ex) {
  const auto n = static_cast<Eigen::Index>(ex.size());
  const auto k = static_cast<Eigen::Index>(ex[0].theta_tilde.size());
  Eigen::MatrixXd y(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      y(i, j) = static_cast<double>(
          ex[static_cast<std::size_t>(i)].theta_tilde[static_cast<std::size_t>(j)]);
  return y;
}

LinearProbe pack_probe(const Eigen::MatrixXd& wb) {
  // wb: (D+1) x K, last row is the bias.
  LinearProbe probe;
  const auto d = wb.rows() - 1;
  const auto k = wb.cols();
  probe.weight.assign(static_cast<std::size_t>(k),
                      std::vector<double>(static_cast<std::size_t>(d), 0.0));
  probe.bias.assign(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < d; ++r)
      probe.weight[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = wb(r, c);
    probe.bias[static_cast<std::size_t>(c)] = wb(d, c);
  }
  return probe;
}

}  // namespace

LinearProbe train_probe(const std::vector<ProbeExample>& examples,
                        const ProbeTrainOptions& opt) {
  TGLM_CHECK_ARG(examples.size() >= 2, "train_probe: need at least 2 examples");
  const Eigen::MatrixXd x = design_matrix(examples);
  const Eigen::MatrixXd y = target_matrix(examples);
  const auto d = x.cols() - 1;

  if (opt.solver == ProbeSolver::kClosedFormRidge) {
    TGLM_CHECK_ARG(opt.ridge_lambda > 0.0,
                   "train_probe: rank-deficient designs need ridge_lambda > 0");
    Eigen::MatrixXd gram = x.transpose() * x;
    for (Eigen::Index i = 0; i < d; ++i) gram(i, i) += opt.ridge_lambda;
    const Eigen::MatrixXd wb = gram.ldlt().solve(x.transpose() * y);
    return pack_probe(wb);
  }

  // Full-batch gradient descent on the same ridge objective, with a step
  // size from the Gram spectral bound and tolerance on the gradient norm.
  Eigen::MatrixXd gram = x.transpose() * x;
  for (Eigen::Index i = 0; i < d; ++i) gram(i, i) += opt.ridge_lambda;
  const Eigen::MatrixXd xty = x.transpose() * y;
  const double lipschitz = 2.0 * gram.operatorNorm();
  const double step = 1.0 / lipschitz;
  Eigen::MatrixXd wb = Eigen::MatrixXd::Zero(x.cols(), y.cols());
  for (std::int64_t it = 0; it < opt.gd_max_iters; ++it) {
    const Eigen::MatrixXd grad = 2.0 * (gram * wb - xty);
    wb -= step * grad;
    if (grad.norm() / std::max(1.0, wb.norm()) < opt.gd_tolerance) break;
  }
  return pack_probe(wb);
}

double probe_mse(const LinearProbe& probe, const std::vector<ProbeExample>& data) {
  TGLM_CHECK_ARG(!data.empty(), "probe_mse: empty data");
  double total = 0.0;
  for (const auto& ex : data) {
    const auto y = probe.predict(ex.hidden);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double diff = y[k] - static_cast<double>(ex.theta_tilde[k]);
      total += diff * diff;
    }
  }
  return total / static_cast<double>(data.size());
}

namespace {

std::size_t argmax_low_tie(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

ProbeMetrics probe_metrics(const LinearProbe& probe,
                           const std::vector<ProbeExample>& heldout) {
  TGLM_CHECK_ARG(!heldout.empty(), "probe_metrics: empty held-out set");
  const std::size_t k = heldout[0].theta_tilde.size();

  std::vector<double> mean(k, 0.0);
  for (const auto& ex : heldout)
    for (std::size_t j = 0; j < k; ++j)
      mean[j] += static_cast<double>(ex.theta_tilde[j]);
  for (auto& m : mean) m /= static_cast<double>(heldout.size());

  std::int64_t hit1 = 0, hit5 = 0;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& ex : heldout) {
    const auto y = probe.predict(ex.hidden);
    std::vector<double> target(ex.theta_tilde.begin(), ex.theta_tilde.end());
    const std::size_t true_arg = argmax_low_tie(target);
    if (argmax_low_tie(y) == true_arg) ++hit1;

    // Top-5 components of the prediction, ties to the lowest index.
    std::vector<std::size_t> order(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return y[a] > y[b];
    });
    const std::size_t top = std::min<std::size_t>(5, order.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (order[i] == true_arg) {
        ++hit5;
        break;
      }
    }

    for (std::size_t j = 0; j < k; ++j) {
      const double r = y[j] - target[j];
      const double c = target[j] - mean[j];
      ss_res += r * r;
      ss_tot += c * c;
    }
  }
  ProbeMetrics m;
  m.acc1 = static_cast<double>(hit1) / static_cast<double>(heldout.size());
  m.acc5 = static_cast<double>(hit5) / static_cast<double>(heldout.size());
  m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                      : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  return m;
}

void save_probe_examples(const std::string& path,
                         const std::vector<ProbeExample>& examples,
                         std::int64_t hidden_dim, std::int64_t target_dim) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_probe_examples: cannot open " + path);
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
  };
  for (const auto& ex : examples) {
    TGLM_CHECK_ARG(static_cast<std::int64_t>(ex.hidden.size()) == hidden_dim &&
                       static_cast<std::int64_t>(ex.theta_tilde.size()) == target_dim,
                   "save_probe_examples: inconsistent dimensions");
    put_u32(static_cast<std::uint32_t>(ex.doc_id));
    put_u32(static_cast<std::uint32_t>(ex.offset));
    os.write(reinterpret_cast<const char*>(ex.hidden.data()),
             static_cast<std::streamsize>(sizeof(float) * ex.hidden.size()));
    os.write(reinterpret_cast<const char*>(ex.theta_tilde.data()),
             static_cast<std::streamsize>(sizeof(float) * ex.theta_tilde.size()));
  }
  os << std::flush;
  if (!os) throw IoError("save_probe_examples: write failed for " + path);
}

std::vector<ProbeExample> load_probe_examples(const std::string& path,
                                              std::int64_t hidden_dim,
                                              std::int64_t target_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_probe_examples: cannot open " + path);
  auto get_u32 = [&]() {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw IoError("load_probe_examples: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
  };
  std::vector<ProbeExample> out;
  while (is.peek() != EOF) {
    ProbeExample ex;
    ex.doc_id = static_cast<std::int32_t>(get_u32());
    ex.offset = static_cast<std::int32_t>(get_u32());
    ex.hidden.resize(static_cast<std::size_t>(hidden_dim));
    ex.theta_tilde.resize(static_cast<std::size_t>(target_dim));
    is.read(reinterpret_cast<char*>(ex.hidden.data()),
            static_cast<std::streamsize>(sizeof(float) * ex.hidden.size()));
    is.read(reinterpret_cast<char*>(ex.theta_tilde.data()),
            static_cast<std::streamsize>(sizeof(float) * ex.theta_tilde.size()));
    if (!is) throw IoError("load_probe_examples: truncated record");
    out.push_back(std::move(ex));
  }
  return out;
}

ProbeDataset split_probe_examples(std::vector<ProbeExample> examples,
                                  double heldout_frac, Rng& rng) {
  TGLM_CHECK_ARG(heldout_frac > 0.0 && heldout_frac < 1.0,
                 "split_probe_examples: heldout_frac out of (0, 1)");
  std::set<std::int32_t> doc_ids;
  for (const auto& ex : examples) doc_ids.insert(ex.doc_id);
  std::vector<std::int32_t> docs(doc_ids.begin(), doc_ids.end());
  rng.shuffle(docs.begin(), docs.end());
  const std::size_t n_held = std::max<std::size_t>(
      1, static_cast<std::size_t>(heldout_frac * static_cast<double>(docs.size())));
  std::set<std::int32_t> held(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_held));

  ProbeDataset ds;
  for (auto& ex : examples) {
    if (held.count(ex.doc_id))
      ds.heldout.push_back(std::move(ex));
    else
      ds.train.push_back(std::move(ex));
  }
  TGLM_CHECK_ARG(!ds.train.empty() && !ds.heldout.empty(),
                 "split_probe_examples: degenerate split");
  return ds;
}

}  // namespace tglm
