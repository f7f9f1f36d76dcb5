#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tglm {

// exp(-(1/n) sum log p): the inverse geometric average of the per-token
// likelihoods. n_tokens must equal the number of scored entries.
double perplexity(std::span<const double> log_probs, std::int64_t n_tokens);
double perplexity_from_sum(double log_prob_sum, std::int64_t n_tokens);

struct MetricsReport {
  std::string model;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string metric;
  double value = 0.0;
  double stderr_over_seeds = -1.0;  // < 0 when not applicable
};

// JSON-lines serialization, one report per line, fixed key order.
std::string to_json_line(const MetricsReport& r);
MetricsReport from_json_line(const std::string& line);
void append_reports(const std::string& path, const std::vector<MetricsReport>& rs);
std::vector<MetricsReport> load_reports(const std::string& path);

// Fixed-width table: one row per (model, metric), mean over seeds with the
// standard deviation in parentheses.
std::string render_report_table(const std::vector<MetricsReport>& rs);

}  // namespace tglm
