// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace datn {

// `key = value` lines; '#' starts a comment; blank lines ignored.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source);

double parse_double(const KeyValue& kv, const std::string& source);
std::size_t parse_size(const KeyValue& kv, const std::string& source);
std::uint64_t parse_u64(const KeyValue& kv, const std::string& source);

std::string read_text_file(const std::string& path);

}  // namespace datn
