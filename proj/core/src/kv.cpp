// SPDX-License-Identifier: Apache-2.0
#include "datn/kv.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "datn/dataset_io.hpp"

namespace datn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const KeyValue& kv, const std::string& source, const char* what) {
  throw FormatError(source + ":" + std::to_string(kv.line) + ": field '" + kv.key +
                    "': expected " + what + ", got '" + kv.value + "'");
}

}  // namespace

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(source + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    KeyValue kv{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), n};
    if (kv.key.empty()) throw FormatError(source + ":" + std::to_string(n) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

double parse_double(const KeyValue& kv, const std::string& source) {
  try {
    std::size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used != kv.value.size()) bad_value(kv, source, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(kv, source, "a number");
  }
}

std::uint64_t parse_u64(const KeyValue& kv, const std::string& source) {
  std::uint64_t v = 0;
  const char* b = kv.value.data();
  const char* e = b + kv.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) bad_value(kv, source, "a non-negative integer");
  return v;
}

std::size_t parse_size(const KeyValue& kv, const std::string& source) {
  return static_cast<std::size_t>(parse_u64(kv, source));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace datn
