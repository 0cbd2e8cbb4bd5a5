// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "datn/caption.hpp"
#include "datn/concepts.hpp"
#include "datn/optim.hpp"
#include "datn/vqa.hpp"

namespace datn {

enum class Task { kCaption, kVqa };
std::string to_string(Task t);
Task parse_task(const std::string& text);

/// Everything a training run depends on besides the dataset. Keys accepted
/// by set() and emitted by to_text() match the member names.
struct RunConfig {
  Task task = Task::kCaption;
  std::string ablation = "full";

  std::size_t canvas = 16;        // G
  std::size_t grid = 4;           // H = W
  std::size_t region_width = 32;  // D
  std::size_t concepts = 24;      // c
  std::size_t similarity = 32;    // d = d'
  std::size_t hidden = 64;        // h
  std::size_t question = 32;      // q
  std::size_t joint = 32;         // h'
  std::size_t answers = 16;       // A
  std::size_t concept_channels = 16;

  OptimizerConfig optimizer;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  double threshold = 0.6;  // epsilon

  double concept_learning_rate = 1e-2;
  std::size_t concept_epochs = 30;
  std::size_t concept_batch_size = 8;

  std::size_t beam_width = 1;
  std::size_t max_caption_length = 16;
  MaxPoolNormalization semantic_norm = MaxPoolNormalization::kSoftmax;

  static const std::vector<std::string>& keys();
  /// Throws std::invalid_argument naming the key on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Canonical key = value text, one line per key in keys() order.
  std::string to_text() const;
  static RunConfig from_text(const std::string& text, const std::string& source);
  static RunConfig load(const std::string& path);

  /// Dimension and range checks; vocabulary-dependent checks happen when a
  /// dataset is attached (see check_against).
  void validate() const;
  void check_against(const Vocabulary& vocab) const;

  CaptionVariant caption_variant() const;
  VqaVariant vqa_variant() const;
  ConceptPredictorDims concept_dims() const;
  CaptionDims caption_dims(std::size_t vocab_size) const;
  VqaDims vqa_dims(std::size_t vocab_size) const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace datn
