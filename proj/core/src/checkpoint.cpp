// SPDX-License-Identifier: Apache-2.0
#include "datn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "datn/dataset_io.hpp"

namespace datn {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");

namespace {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t start, const std::string& source)
      : bytes_(bytes), source_(source), pos_(start) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(source_ + ": offset " + std::to_string(pos_) + ": " + msg);
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_;
};

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const TensorRecord& Checkpoint::at(const std::string& name) const {
  const auto* r = find(name);
  if (!r) throw std::invalid_argument("checkpoint: missing record '" + name + "'");
  return *r;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out = "DATN";
  put<std::uint32_t>(out, ck.version);
  put_string(out, ck.config_text);
  put<std::uint64_t>(out, ck.step);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.records.size()));
  for (const auto& r : ck.records) {
    if (shape_numel(r.shape) != r.values.size()) {
      throw std::invalid_argument("checkpoint: record '" + r.name + "' has " +
                                  std::to_string(r.values.size()) + " values for shape " +
                                  shape_str(r.shape));
    }
    put_string(out, r.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) put<std::uint64_t>(out, d);
    for (double v : r.values) put<double>(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "DATN") != 0) {
    throw FormatError(source + ": not a checkpoint (bad magic)");
  }
  Reader in(bytes, 4, source);
  Checkpoint ck;
  ck.version = in.get<std::uint32_t>("version");
  if (ck.version != kCheckpointVersion) {
    in.fail("unsupported checkpoint version " + std::to_string(ck.version));
  }
  ck.config_text = in.get_string("config");
  ck.step = in.get<std::uint64_t>("step");
  const auto count = in.get<std::uint32_t>("record count");
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord r;
    r.name = in.get_string("record name");
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank == 0 || rank > 8) in.fail("record '" + r.name + "': bad rank " + std::to_string(rank));
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = in.get<std::uint64_t>("dimension");
      if (d == 0 || d > (std::uint64_t{1} << 32)) in.fail("record '" + r.name + "': bad dimension");
      r.shape.push_back(static_cast<std::size_t>(d));
      n *= static_cast<std::size_t>(d);
    }
    if (n > bytes.size()) in.fail("record '" + r.name + "': truncated values");
    r.values.resize(n);
    for (auto& v : r.values) v = in.get<double>("values");
    ck.records.push_back(std::move(r));
  }
  if (!in.done()) in.fail("trailing bytes after last record");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ck);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), path.string());
}

void append_params(Checkpoint& ck, const ParamList& params) {
  for (const auto& p : params) {
    const auto v = p.tensor.data();
    ck.records.push_back({p.name, p.tensor.shape(), std::vector<double>(v.begin(), v.end())});
  }
}

void restore_params(const Checkpoint& ck, ParamList& params) {
  for (auto& p : params) {
    const auto& r = ck.at(p.name);
    if (r.shape != p.tensor.shape()) {
      throw std::invalid_argument("checkpoint: record '" + p.name + "' has shape " +
                                  shape_str(r.shape) + ", model expects " +
                                  shape_str(p.tensor.shape()));
    }
    std::copy(r.values.begin(), r.values.end(), p.tensor.mutable_data().begin());
  }
}

}  // namespace datn
