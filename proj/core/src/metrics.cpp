#include "tglm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tglm/error.hpp"

namespace tglm {

double perplexity_from_sum(double log_prob_sum, std::int64_t n_tokens) {
  TGLM_CHECK_ARG(n_tokens > 0, "perplexity: n_tokens must be positive");
  return std::exp(-log_prob_sum / static_cast<double>(n_tokens));
}

double perplexity(std::span<const double> log_probs, std::int64_t n_tokens) {
  TGLM_CHECK_ARG(static_cast<std::int64_t>(log_probs.size()) == n_tokens,
                 "perplexity: n_tokens must equal the scored token count");
  double s = 0.0;
  for (double lp : log_probs) s += lp;
  return perplexity_from_sum(s, n_tokens);
}

std::string to_json_line(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["metric"] = r.metric;
  // Fixed-precision text keeps report files byte-stable across runs.
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", r.value);
  j["value"] = nlohmann::json::parse(buf);
  if (r.stderr_over_seeds >= 0.0) {
    std::snprintf(buf, sizeof buf, "%.10g", r.stderr_over_seeds);
    j["stderr"] = nlohmann::json::parse(buf);
  }
  return j.dump();
}

MetricsReport from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  MetricsReport r;
  r.model = j.at("model").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.metric = j.at("metric").get<std::string>();
  r.value = j.at("value").get<double>();
  if (j.contains("stderr")) r.stderr_over_seeds = j.at("stderr").get<double>();
  return r;
}

void append_reports(const std::string& path, const std::vector<MetricsReport>& rs) {
  std::ofstream os(path, std::ios::binary | std::ios::app);
  if (!os) throw IoError("append_reports: cannot open " + path);
  for (const auto& r : rs) os << to_json_line(r) << '\n';
  os << std::flush;
  if (!os) throw IoError("append_reports: write failed for " + path);
}

std::vector<MetricsReport> load_reports(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_reports: cannot open " + path);
  std::vector<MetricsReport> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(from_json_line(line));
  }
  return out;
}

std::string render_report_table(const std::vector<MetricsReport>& rs) {
  // Group by (model, metric), aggregate over seeds.
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rs) groups[{r.model, r.metric}].push_back(r.value);

  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-24s %-18s %14s %6s\n", "Model", "Metric",
                "Mean (std)", "Runs");
  os << buf;
  os << std::string(64, '-') << '\n';
  for (const auto& [key, values] : groups) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = values.size() > 1
                          ? std::sqrt(var / static_cast<double>(values.size() - 1))
                          : 0.0;
    char cell[40];
    std::snprintf(cell, sizeof cell, "%.3f (%.3f)", mean, sd);
    std::snprintf(buf, sizeof buf, "%-24s %-18s %14s %6zu\n", key.first.c_str(),
                  key.second.c_str(), cell, values.size());
    os << buf;
  }
  return os.str();
}

}  // namespace tglm
