#include "tglm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "tglm/error.hpp"
#include "tglm/rng.hpp"

namespace tglm {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'L', 'M'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeF64 = 1;

void write_bytes(std::ofstream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le_int(std::ofstream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  write_bytes(os, buf, sizeof(T));
}

template <typename T>
T read_le_int(std::ifstream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw IoError("checkpoint: truncated header");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

// Tensor payloads are written via memcpy; IEEE little-endian layout is
// assumed for the host, which all supported targets satisfy.
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLstmLm: return "lstm";
    case ModelKind::kTopicRnn: return "topicrnn";
    case ModelKind::kVrtm: return "vrtm";
    case ModelKind::kTdlm: return "tdlm";
    case ModelKind::kLda: return "lda";
  }
  return "unknown";
}

struct CheckpointWriter::Impl {
  std::ofstream os;
  std::string path;
  bool finished = false;
};

CheckpointWriter::CheckpointWriter(const std::string& path, ModelKind kind,
                                   const std::string& config_blob)
    : impl_(new Impl) {
  impl_->path = path;
  impl_->os.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->os) throw IoError("CheckpointWriter: cannot open " + path);
  write_bytes(impl_->os, kMagic, 4);
  write_le_int<std::uint16_t>(impl_->os, kVersion);
  write_le_int<std::uint8_t>(impl_->os, static_cast<std::uint8_t>(kind));
  write_le_int<std::uint32_t>(impl_->os, static_cast<std::uint32_t>(config_blob.size()));
  write_bytes(impl_->os, config_blob.data(), config_blob.size());
}

CheckpointWriter::~CheckpointWriter() {
  if (!impl_->finished) {
    impl_->os.close();
  }
  delete impl_;
}

namespace {

template <typename T>
void add_record(std::ofstream& os, const std::string& name, std::uint8_t dtype,
                const NumArray<T>& a) {
  write_le_int<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  write_bytes(os, name.data(), name.size());
  write_le_int<std::uint8_t>(os, dtype);
  write_le_int<std::uint8_t>(os, static_cast<std::uint8_t>(a.rank()));
  for (std::int64_t d : a.shape())
    write_le_int<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  write_bytes(os, a.data(), static_cast<std::size_t>(a.size()) * sizeof(T));
}

}  // namespace

void CheckpointWriter::add(const std::string& name, const NumArray<float>& a) {
  add_record(impl_->os, name, kDtypeF32, a);
}

void CheckpointWriter::add(const std::string& name, const NumArray<double>& a) {
  add_record(impl_->os, name, kDtypeF64, a);
}

void CheckpointWriter::finish() {
  impl_->os.flush();
  if (!impl_->os) throw IoError("CheckpointWriter: write failed for " + impl_->path);
  impl_->os.close();
  impl_->finished = true;
}

CheckpointReader::CheckpointReader(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("CheckpointReader: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("CheckpointReader: bad magic in " + path);
  version_ = read_le_int<std::uint16_t>(is);
  if (version_ != kVersion)
    throw IoError("CheckpointReader: unsupported version in " + path);
  kind_ = static_cast<ModelKind>(read_le_int<std::uint8_t>(is));
  const auto blob_len = read_le_int<std::uint32_t>(is);
  config_blob_.resize(blob_len);
  is.read(config_blob_.data(), blob_len);
  if (!is) throw IoError("CheckpointReader: truncated config blob in " + path);

  while (is.peek() != EOF) {
    const auto name_len = read_le_int<std::uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    Record rec;
    rec.dtype = read_le_int<std::uint8_t>(is);
    const auto rank = read_le_int<std::uint8_t>(is);
    std::int64_t count = 1;
    for (int i = 0; i < rank; ++i) {
      rec.dims.push_back(read_le_int<std::uint32_t>(is));
      count *= rec.dims.back();
    }
    const std::size_t elem = rec.dtype == kDtypeF64 ? 8 : 4;
    rec.bytes.resize(static_cast<std::size_t>(count) * elem);
    is.read(rec.bytes.data(), static_cast<std::streamsize>(rec.bytes.size()));
    if (!is) throw IoError("CheckpointReader: truncated record " + name);
    records_.emplace(std::move(name), std::move(rec));
  }
}

std::vector<std::string> CheckpointReader::names() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [k, v] : records_) out.push_back(k);
  return out;
}

template <typename T>
NumArray<T> CheckpointReader::tensor(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end())
    throw IoError("CheckpointReader: missing record " + name);
  const Record& rec = it->second;
  NumArray<T> out(rec.dims);
  if (rec.dtype == kDtypeF32) {
    const float* src = reinterpret_cast<const float*>(rec.bytes.data());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(src[i]);
  } else if (rec.dtype == kDtypeF64) {
    const double* src = reinterpret_cast<const double*>(rec.bytes.data());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(src[i]);
  } else {
    throw IoError("CheckpointReader: unknown dtype for " + name);
  }
  return out;
}

template NumArray<float> CheckpointReader::tensor<float>(const std::string&) const;
template NumArray<double> CheckpointReader::tensor<double>(const std::string&) const;

std::map<std::string, std::string> parse_kv_blob(const std::string& blob) {
  std::map<std::string, std::string> kv;
  std::istringstream is(blob);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.pop_back();
      return s;
    };
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

std::string render_kv_blob(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string file_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("file_hash: cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (is) {
    is.read(buf, sizeof buf);
    const auto n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace tglm
