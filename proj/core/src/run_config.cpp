#include "tglm/run_config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tglm/error.hpp"
#include "tglm/rng.hpp"

namespace tglm {

namespace {

std::string strip(std::string s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.pop_back();
  return s;
}

void parse_into(const std::string& text, const std::string& base_dir,
                RunConfig& cfg, int depth) {
  TGLM_CHECK_ARG(depth < 8, "RunConfig: include depth exceeded");
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("include ", 0) == 0) {
      std::string inc = strip(line.substr(8));
      std::filesystem::path p(inc);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      std::ifstream f(p, std::ios::binary);
      if (!f) throw IoError("RunConfig: cannot open include " + p.string());
      std::stringstream buf;
      buf << f.rdbuf();
      parse_into(buf.str(), p.parent_path().string(), cfg, depth + 1);
      continue;
    }
    const auto eq = line.find('=');
    TGLM_CHECK_ARG(eq != std::string::npos,
                   "RunConfig: malformed line: " + line);
    cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("RunConfig: cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  RunConfig cfg;
  parse_into(buf.str(), std::filesystem::path(path).parent_path().string(), cfg, 0);
  return cfg;
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  parse_into(text, ".", cfg, 0);
  return cfg;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = kv_.find(key);
  TGLM_CHECK_ARG(it != kv_.end(), "RunConfig: missing key " + key);
  return it->second;
}

std::string RunConfig::get_or(const std::string& key,
                              const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : std::stoll(it->second);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : std::stod(it->second);
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  return it->second == "1" || it->second == "true" || it->second == "yes";
}

std::vector<std::uint64_t> RunConfig::get_seeds() const {
  std::vector<std::uint64_t> seeds;
  std::string s = get_or("seeds", "1");
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = strip(item);
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  TGLM_CHECK_ARG(!seeds.empty(), "RunConfig: empty seeds list");
  return seeds;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string RunConfig::hash() const {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical())));
  return std::string(hex);
}

void RunConfig::merge(const RunConfig& overrides) {
  for (const auto& [k, v] : overrides.kv_) kv_[k] = v;
}

}  // namespace tglm
