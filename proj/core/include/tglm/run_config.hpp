#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tglm {

// Flat key=value experiment configuration. Files may pull in other files
// with `include <path>` (relative to the including file); later assignments
// and command-line overrides win. The stable digest of the canonical
// serialization is recorded in every checkpoint and report.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> get_seeds() const;  // "seeds" as comma list

  // Canonical text: sorted keys, one per line.
  std::string canonical() const;
  std::string hash() const;  // FNV-1a64 of canonical(), 16 hex chars

  const std::map<std::string, std::string>& entries() const { return kv_; }
  void merge(const RunConfig& overrides);

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace tglm
