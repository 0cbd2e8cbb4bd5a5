// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "datn/world.hpp"

namespace datn {

/// Raised for malformed dataset, vocabulary or config files. The message
/// names the file, the 1-based line and the offending field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

/// One JSON object per line: {seed, objects, captions, qa, y}.
std::string sample_to_json(const Sample& sample, const Vocabulary& vocab);
Sample sample_from_json(const std::string& line, const Vocabulary& vocab,
                        const WorldConfig& world);

void save_samples(const std::vector<Sample>& samples, const Vocabulary& vocab,
                  const std::filesystem::path& path);
std::vector<Sample> load_samples(const std::filesystem::path& path, const Vocabulary& vocab,
                                 const WorldConfig& world);

std::string world_to_text(const WorldConfig& world);
WorldConfig world_from_text(const std::string& text);

/// Writes world.cfg, vocab.txt, train.jsonl and test.jsonl into `dir`.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// 64-bit FNV-1a of a file's bytes.
std::uint64_t file_fingerprint(const std::filesystem::path& path);

}  // namespace datn
