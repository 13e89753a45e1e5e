#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "msgu/tensor.hpp"

namespace msgu {

enum class DType : std::uint8_t { f32 = 0, f64 = 1, text = 2, i64 = 3 };

/// One named array. Bytes hold little-endian element data.
struct CheckpointRecord {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;

  std::size_t element_count() const;
};

/// Versioned container of named arrays. Wire format: "MSGU", u32 version,
/// then per record u32 name length, name bytes, u8 dtype, u8 rank, u32 dims,
/// raw data; all integers little-endian.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  /// Stored at the engine's precision, as a rank-4 array.
  void put(const std::string& name, const Tensor& tensor);
  void put_text(const std::string& name, const std::string& text);
  void put_i64(const std::string& name, std::int64_t value);
  void put_all(const TensorList& tensors);

  bool contains(const std::string& name) const;
  const CheckpointRecord& record(const std::string& name) const;
  const std::vector<CheckpointRecord>& records() const { return records_; }

  std::string text(const std::string& name) const;
  std::int64_t i64(const std::string& name) const;
  /// Values converted to Real; f32 and f64 records are both accepted.
  std::vector<Real> values(const std::string& name) const;

  /// Copies records into the given tensors by name. Every name and shape is
  /// checked before the first tensor is written.
  void restore(const TensorList& targets) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  void add(CheckpointRecord record);
  std::vector<CheckpointRecord> records_;
};

}  // namespace msgu
