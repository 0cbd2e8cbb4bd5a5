// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "datn/tensor.hpp"

namespace datn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
  bool operator==(const TensorRecord&) const = default;
};

/// Binary layout (little-endian throughout):
///   "DATN" | u32 version | u32 len + config text | u64 step | u32 count |
///   count x (u32 len + name | u32 rank | rank x u64 dim | f64 values).
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_text;
  std::uint64_t step = 0;
  std::vector<TensorRecord> records;

  const TensorRecord* find(const std::string& name) const;
  const TensorRecord& at(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Appends one record per parameter (values copied).
void append_params(Checkpoint& ck, const ParamList& params);
/// Copies record values into the parameters by name; shapes must agree.
void restore_params(const Checkpoint& ck, ParamList& params);

}  // namespace datn
