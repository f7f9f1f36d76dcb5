#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tglm/numarray.hpp"
#include "tglm/params.hpp"

namespace tglm {

enum class ModelKind : std::uint8_t {
  kLstmLm = 0,
  kTopicRnn = 1,
  kVrtm = 2,
  kTdlm = 3,
  kLda = 4,
};

const char* model_kind_name(ModelKind kind);

// Self-describing binary container shared by every model kind.
// Layout: magic "TGLM", version u16, model kind u8, config blob
// (u32 length + UTF-8 bytes), then named tensor records:
// name length u16, name bytes, dtype u8, rank u8, dims u32 x rank,
// raw little-endian data.
class CheckpointWriter {
 public:
  CheckpointWriter(const std::string& path, ModelKind kind,
                   const std::string& config_blob);
  ~CheckpointWriter();

  void add(const std::string& name, const NumArray<float>& a);
  void add(const std::string& name, const NumArray<double>& a);

  template <typename T>
  void add_params(const ParamSet<T>& params) {
    for (const auto& r : params.refs()) add(r.name, *r.value);
  }

  void finish();

 private:
  struct Impl;
  Impl* impl_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path);

  ModelKind kind() const { return kind_; }
  std::uint16_t version() const { return version_; }
  const std::string& config_blob() const { return config_blob_; }
  bool has(const std::string& name) const { return records_.count(name) > 0; }
  std::vector<std::string> names() const;

  // Reads a record into the requested precision (converting if needed).
  template <typename T>
  NumArray<T> tensor(const std::string& name) const;

  // Loads records into all registered params by name; throws on a missing
  // record or a shape mismatch.
  template <typename T>
  void load_params(ParamSet<T>& params) const {
    for (auto& r : params.refs()) {
      NumArray<T> t = tensor<T>(r.name);
      TGLM_CHECK_CONTRACT(t.shape() == r.value->shape(),
                          "checkpoint: shape mismatch for " + r.name);
      *r.value = std::move(t);
    }
  }

 private:
  struct Record {
    std::uint8_t dtype;
    std::vector<std::int64_t> dims;
    std::vector<char> bytes;
  };
  ModelKind kind_;
  std::uint16_t version_ = 0;
  std::string config_blob_;
  std::map<std::string, Record> records_;
};

// Flat key=value blob helpers used for checkpoint config payloads.
std::map<std::string, std::string> parse_kv_blob(const std::string& blob);
std::string render_kv_blob(const std::map<std::string, std::string>& kv);

// FNV-1a over a file's bytes, as a 16-hex-digit string.
std::string file_hash(const std::string& path);

}  // namespace tglm
