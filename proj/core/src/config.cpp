// SPDX-License-Identifier: Apache-2.0
#include "datn/config.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

#include "datn/dataset_io.hpp"
#include "datn/kv.hpp"

namespace datn {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: field '" + key + "': " + what);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    bad(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, "expected a number, got '" + v + "'");
  return out;
}

std::string fmt(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

std::string norm_name(MaxPoolNormalization n) {
  return n == MaxPoolNormalization::kSoftmax ? "softmax" : "as_printed";
}

}  // namespace

std::string to_string(Task t) { return t == Task::kCaption ? "caption" : "vqa"; }

Task parse_task(const std::string& text) {
  if (text == "caption") return Task::kCaption;
  if (text == "vqa") return Task::kVqa;
  throw std::invalid_argument("unknown task '" + text + "' (expected caption or vqa)");
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "task",          "ablation",       "canvas",        "grid",
      "region_width",  "concepts",       "similarity",    "hidden",
      "question",      "joint",          "answers",       "concept_channels",
      "optimizer",     "learning_rate",  "beta1",         "beta2",
      "rho",           "epsilon",        "epochs",        "batch_size",
      "seed",          "threshold",      "concept_learning_rate",
      "concept_epochs", "concept_batch_size", "beam_width", "max_caption_length",
      "semantic_norm"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  try {
    if (key == "task") task = parse_task(v);
    else if (key == "ablation") ablation = v;
    else if (key == "canvas") canvas = to_size(key, v);
    else if (key == "grid") grid = to_size(key, v);
    else if (key == "region_width") region_width = to_size(key, v);
    else if (key == "concepts") concepts = to_size(key, v);
    else if (key == "similarity") similarity = to_size(key, v);
    else if (key == "hidden") hidden = to_size(key, v);
    else if (key == "question") question = to_size(key, v);
    else if (key == "joint") joint = to_size(key, v);
    else if (key == "answers") answers = to_size(key, v);
    else if (key == "concept_channels") concept_channels = to_size(key, v);
    else if (key == "optimizer") optimizer.kind = parse_optimizer_kind(v);
    else if (key == "learning_rate") optimizer.learning_rate = to_double(key, v);
    else if (key == "beta1") optimizer.beta1 = to_double(key, v);
    else if (key == "beta2") optimizer.beta2 = to_double(key, v);
    else if (key == "rho") optimizer.rho = to_double(key, v);
    else if (key == "epsilon") optimizer.epsilon = to_double(key, v);
    else if (key == "epochs") epochs = to_size(key, v);
    else if (key == "batch_size") batch_size = to_size(key, v);
    else if (key == "seed") seed = to_size(key, v);
    else if (key == "threshold") threshold = to_double(key, v);
    else if (key == "concept_learning_rate") concept_learning_rate = to_double(key, v);
    else if (key == "concept_epochs") concept_epochs = to_size(key, v);
    else if (key == "concept_batch_size") concept_batch_size = to_size(key, v);
    else if (key == "beam_width") beam_width = to_size(key, v);
    else if (key == "max_caption_length") max_caption_length = to_size(key, v);
    else if (key == "semantic_norm") {
      if (v == "softmax") semantic_norm = MaxPoolNormalization::kSoftmax;
      else if (v == "as_printed") semantic_norm = MaxPoolNormalization::kAsPrinted;
      else bad(key, "expected softmax or as_printed, got '" + v + "'");
    } else {
      throw std::invalid_argument("config: unknown field '" + key + "'");
    }
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    if (msg.rfind("config:", 0) == 0) throw;
    bad(key, msg);
  }
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "task") return to_string(task);
  if (key == "ablation") return ablation;
  if (key == "canvas") return std::to_string(canvas);
  if (key == "grid") return std::to_string(grid);
  if (key == "region_width") return std::to_string(region_width);
  if (key == "concepts") return std::to_string(concepts);
  if (key == "similarity") return std::to_string(similarity);
  if (key == "hidden") return std::to_string(hidden);
  if (key == "question") return std::to_string(question);
  if (key == "joint") return std::to_string(joint);
  if (key == "answers") return std::to_string(answers);
  if (key == "concept_channels") return std::to_string(concept_channels);
  if (key == "optimizer") return to_string(optimizer.kind);
  if (key == "learning_rate") return fmt(optimizer.learning_rate);
  if (key == "beta1") return fmt(optimizer.beta1);
  if (key == "beta2") return fmt(optimizer.beta2);
  if (key == "rho") return fmt(optimizer.rho);
  if (key == "epsilon") return fmt(optimizer.epsilon);
  if (key == "epochs") return std::to_string(epochs);
  if (key == "batch_size") return std::to_string(batch_size);
  if (key == "seed") return std::to_string(seed);
  if (key == "threshold") return fmt(threshold);
  if (key == "concept_learning_rate") return fmt(concept_learning_rate);
  if (key == "concept_epochs") return std::to_string(concept_epochs);
  if (key == "concept_batch_size") return std::to_string(concept_batch_size);
  if (key == "beam_width") return std::to_string(beam_width);
  if (key == "max_caption_length") return std::to_string(max_caption_length);
  if (key == "semantic_norm") return norm_name(semantic_norm);
  throw std::invalid_argument("config: unknown field '" + key + "'");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += k + " = " + get(k) + "\n";
  return out;
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& source) {
  RunConfig c;
  for (const auto& kv : parse_key_values(text, source)) {
    try {
      c.set(kv.key, kv.value);
    } catch (const std::invalid_argument& e) {
      throw FormatError(source + ":" + std::to_string(kv.line) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_text(read_text_file(path), path); }

CaptionVariant RunConfig::caption_variant() const { return parse_caption_variant(ablation); }
VqaVariant RunConfig::vqa_variant() const { return parse_vqa_variant(ablation); }

void RunConfig::validate() const {
  try {
    if (task == Task::kCaption) (void)caption_variant();
    else (void)vqa_variant();
  } catch (const std::invalid_argument& e) {
    bad("ablation", e.what());
  }
  if (canvas == 0 || canvas % 4 != 0) bad("canvas", "must be a positive multiple of 4");
  if (grid != canvas / 4) {
    bad("grid", "must equal canvas/4 = " + std::to_string(canvas / 4) + ", got " +
                    std::to_string(grid));
  }
  const std::pair<const char*, std::size_t> positive[] = {
      {"region_width", region_width}, {"concepts", concepts},
      {"similarity", similarity},     {"hidden", hidden},
      {"question", question},         {"joint", joint},
      {"concept_channels", concept_channels}, {"epochs", epochs},
      {"batch_size", batch_size},     {"concept_batch_size", concept_batch_size},
      {"beam_width", beam_width},     {"max_caption_length", max_caption_length}};
  for (const auto& [k, v] : positive) {
    if (v == 0) bad(k, "must be positive");
  }
  if (answers < 2) bad("answers", "must be at least 2");
  if (!(optimizer.learning_rate > 0.0)) bad("learning_rate", "must be positive");
  if (!(concept_learning_rate > 0.0)) bad("concept_learning_rate", "must be positive");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) bad("beta1", "must be in [0, 1)");
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) bad("beta2", "must be in [0, 1)");
  if (!(optimizer.rho >= 0.0 && optimizer.rho < 1.0)) bad("rho", "must be in [0, 1)");
  if (!(optimizer.epsilon > 0.0)) bad("epsilon", "must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0)) bad("threshold", "must be in [0, 1]");
}

void RunConfig::check_against(const Vocabulary& vocab) const {
  validate();
  if (vocab.concept_count() != concepts) {
    bad("concepts", "is " + std::to_string(concepts) + " but the dataset vocabulary has " +
                        std::to_string(vocab.concept_count()) + " concepts");
  }
  if (vocab.answer_count() != answers) {
    bad("answers", "is " + std::to_string(answers) + " but the dataset vocabulary has " +
                       std::to_string(vocab.answer_count()) + " answers");
  }
}

ConceptPredictorDims RunConfig::concept_dims() const {
  ConceptPredictorDims d;
  d.canvas = canvas;
  d.hidden_channels = concept_channels;
  d.features = region_width;
  d.concepts = concepts;
  return d;
}

CaptionDims RunConfig::caption_dims(std::size_t vocab_size) const {
  CaptionDims d;
  d.regions = grid * grid;
  d.region_width = region_width;
  d.concepts = concepts;
  d.similarity = similarity;
  d.hidden = hidden;
  d.vocab = vocab_size;
  return d;
}

VqaDims RunConfig::vqa_dims(std::size_t vocab_size) const {
  VqaDims d;
  d.regions = grid * grid;
  d.region_width = region_width;
  d.concepts = concepts;
  d.similarity = similarity;
  d.question = question;
  d.joint = joint;
  d.answers = answers;
  d.vocab = vocab_size;
  return d;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_text() == b.to_text(); }

}  // namespace datn
