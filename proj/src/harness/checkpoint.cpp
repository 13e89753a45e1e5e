#include "msgu/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <fmt/format.h>

namespace msgu {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO copies raw little-endian bytes");

namespace {

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::text: return 1;
    case DType::i64: return 8;
  }
  throw std::runtime_error("unknown dtype");
}

template <typename T>
void put_raw(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<std::uint8_t> take(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw std::runtime_error(fmt::format("{}: truncated at byte {}", path_.string(), pos_));
    }
  }
  const std::vector<std::uint8_t>& bytes_;
  fs::path path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t CheckpointRecord::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void Checkpoint::add(CheckpointRecord record) {
  if (contains(record.name)) {
    throw std::invalid_argument(fmt::format("checkpoint already holds '{}'", record.name));
  }
  records_.push_back(std::move(record));
}

void Checkpoint::put(const std::string& name, const Tensor& tensor) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = kDoublePrecision ? DType::f64 : DType::f32;
  const Shape& s = tensor.shape();
  r.dims = {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
            static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
  const auto d = tensor.data();
  r.bytes.resize(d.size_bytes());
  std::memcpy(r.bytes.data(), d.data(), d.size_bytes());
  add(std::move(r));
}

void Checkpoint::put_text(const std::string& name, const std::string& text) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = DType::text;
  r.dims = {static_cast<std::uint32_t>(text.size())};
  r.bytes.assign(text.begin(), text.end());
  add(std::move(r));
}

void Checkpoint::put_i64(const std::string& name, std::int64_t value) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = DType::i64;
  r.dims = {1};
  put_raw(r.bytes, value);
  add(std::move(r));
}

void Checkpoint::put_all(const TensorList& tensors) {
  for (const auto& t : tensors) put(t.name, t.tensor);
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& r : records_) {
    if (r.name == name) return true;
  }
  return false;
}

const CheckpointRecord& Checkpoint::record(const std::string& name) const {
  for (const auto& r : records_) {
    if (r.name == name) return r;
  }
  throw std::runtime_error(fmt::format("checkpoint has no record '{}'", name));
}

std::string Checkpoint::text(const std::string& name) const {
  const auto& r = record(name);
  if (r.dtype != DType::text) throw std::runtime_error(fmt::format("'{}' is not text", name));
  return std::string(r.bytes.begin(), r.bytes.end());
}

std::int64_t Checkpoint::i64(const std::string& name) const {
  const auto& r = record(name);
  if (r.dtype != DType::i64 || r.bytes.size() != 8) {
    throw std::runtime_error(fmt::format("'{}' is not a single i64", name));
  }
  std::int64_t v;
  std::memcpy(&v, r.bytes.data(), 8);
  return v;
}

std::vector<Real> Checkpoint::values(const std::string& name) const {
  const auto& r = record(name);
  const std::size_t n = r.element_count();
  std::vector<Real> out(n);
  if (r.dtype == DType::f32) {
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, r.bytes.data() + 4 * i, 4);
      out[i] = static_cast<Real>(v);
    }
  } else if (r.dtype == DType::f64) {
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      std::memcpy(&v, r.bytes.data() + 8 * i, 8);
      out[i] = static_cast<Real>(v);
    }
  } else {
    throw std::runtime_error(fmt::format("'{}' is not a real array", name));
  }
  return out;
}

void Checkpoint::restore(const TensorList& targets) const {
  for (const auto& t : targets) {
    if (!contains(t.name)) throw std::runtime_error(fmt::format("checkpoint lacks '{}'", t.name));
    const auto& r = record(t.name);
    const Shape& s = t.tensor.shape();
    const std::vector<std::uint32_t> want{static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                                          static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
    if ((r.dtype != DType::f32 && r.dtype != DType::f64) || r.dims != want) {
      throw std::runtime_error(fmt::format("checkpoint record '{}' does not fit tensor {}", t.name, s.str()));
    }
  }
  for (const auto& t : targets) {
    const auto v = values(t.name);
    Tensor dst = t.tensor;
    std::copy(v.begin(), v.end(), dst.data().begin());
  }
}

void Checkpoint::save(const fs::path& path) const {
  std::vector<std::uint8_t> out{'M', 'S', 'G', 'U'};
  put_raw(out, kVersion);
  for (const auto& r : records_) {
    put_raw(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    put_raw(out, static_cast<std::uint8_t>(r.dtype));
    put_raw(out, static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) put_raw(out, d);
    out.insert(out.end(), r.bytes.begin(), r.bytes.end());
  }
  // Write to a sibling and rename so a failed write never leaves a torn file.
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(fmt::format("cannot write checkpoint {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

Checkpoint Checkpoint::load(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open checkpoint {}", path.string()));
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader in(bytes, path);
  const auto magic = in.take(4);
  if (std::memcmp(magic.data(), "MSGU", 4) != 0) {
    throw std::runtime_error(fmt::format("{}: not a checkpoint (bad magic)", path.string()));
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    throw std::runtime_error(fmt::format("{}: unsupported version {}", path.string(), version));
  }
  Checkpoint ck;
  while (!in.done()) {
    CheckpointRecord r;
    const auto len = in.get<std::uint32_t>();
    const auto name = in.take(len);
    r.name.assign(name.begin(), name.end());
    const auto dtype = in.get<std::uint8_t>();
    if (dtype > 3) throw std::runtime_error(fmt::format("{}: record '{}' has dtype {}", path.string(), r.name, dtype));
    r.dtype = static_cast<DType>(dtype);
    const auto rank = in.get<std::uint8_t>();
    for (int i = 0; i < rank; ++i) r.dims.push_back(in.get<std::uint32_t>());
    r.bytes = in.take(r.element_count() * dtype_size(r.dtype));
    ck.add(std::move(r));
  }
  return ck;
}

}  // namespace msgu
