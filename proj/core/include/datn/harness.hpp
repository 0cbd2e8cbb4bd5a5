// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "datn/caption.hpp"
#include "datn/checkpoint.hpp"
#include "datn/concepts.hpp"
#include "datn/config.hpp"
#include "datn/metrics.hpp"
#include "datn/vqa.hpp"
#include "datn/world.hpp"

namespace datn {

/// A trained (or initialised) model for one task: the frozen concept
/// predictor plus exactly one task head.
struct TaskModel {
  RunConfig config;
  ConceptPredictor predictor;
  std::optional<CaptionModel> caption;
  std::optional<VqaModel> vqa;

  ParamList head_params() const;
  ParamList all_params() const;
};

/// Fresh head on top of `predictor`, initialised from the config seed.
TaskModel init_task_model(const RunConfig& config, std::size_t vocab_size,
                          const ConceptPredictor& predictor);

struct LossRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  bool operator==(const LossRecord&) const = default;
};

/// "step loss" header then one "k value" line per record, values printed
/// with 17 significant digits.
std::string format_loss_log(const std::vector<LossRecord>& records);
std::vector<LossRecord> parse_loss_log(const std::string& text, const std::string& source);

/// Trains the concept predictor alone on the multi-label loss.
ConceptPredictor train_concept_predictor(const RunConfig& config,
                                         const std::vector<Sample>& train,
                                         std::vector<LossRecord>* log = nullptr);

using ProgressFn = std::function<void(const std::string&)>;

struct TrainOptions {
  std::filesystem::path out_dir;                 // empty: write nothing
  std::optional<std::filesystem::path> resume;   // checkpoint to continue from
  std::optional<std::uint64_t> stop_after;       // stop once this many head steps are done
  const ConceptPredictor* pretrained = nullptr;  // skip the concept phase
  ProgressFn progress;
};

struct TrainResult {
  TaskModel model;
  std::vector<LossRecord> losses;          // head steps run by this call
  std::vector<LossRecord> concept_losses;  // empty when pretrained or resumed
  std::uint64_t step = 0;                  // head steps completed
  std::uint64_t total_steps = 0;
};

/// Concept phase, then the task head. With an out_dir, writes model.ckpt,
/// loss.log, concept_loss.log and config.txt there. Deterministic given the
/// config and dataset.
TrainResult run_training(const RunConfig& config, const Dataset& data, const TrainOptions& options);

Checkpoint make_checkpoint(const TaskModel& model, const Optimizer* optimizer, std::uint64_t step);
TaskModel load_task_model(const Checkpoint& ck, std::size_t vocab_size);

struct MetricsReport {
  Task task = Task::kCaption;
  std::vector<std::pair<std::string, double>> values;

  double get(const std::string& name) const;
  std::string to_table() const;
  std::string to_json() const;
};

/// Captions: bleu1..bleu4, cider, exact_match. VQA: accuracy, per-type
/// accuracy and count, wups_0.9, wups_0.0.
MetricsReport evaluate(const TaskModel& model, const Vocabulary& vocab,
                       const std::vector<Sample>& split, const Taxonomy& taxonomy);

/// Caption words with start, end and padding markers removed.
Sentence caption_words(const std::vector<int>& tokens, const Vocabulary& vocab);

const std::vector<std::string>& ablation_variants(Task task);

struct AblationTable {
  Task task = Task::kCaption;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> variants;
  std::vector<std::vector<MetricsReport>> reports;  // [variant][seed]

  double mean(const std::string& variant, const std::string& metric) const;
  std::string to_table() const;
  std::string to_json() const;
};

/// Trains and evaluates every variant for every seed; the concept predictor
/// is trained once per seed and shared by the variants.
AblationTable run_ablation_suite(const RunConfig& base, const Dataset& data,
                                 const std::vector<std::uint64_t>& seeds,
                                 const Taxonomy& taxonomy, const ProgressFn& progress = {});

/// Plain-text H x W matrix, one row per line, 17 significant digits.
std::string region_matrix_text(const std::vector<double>& weights, std::size_t height,
                               std::size_t width);
/// Binary PGM (P5, maxval 255), weights scaled so the maximum is 255.
std::string region_pgm(const std::vector<double>& weights, std::size_t height, std::size_t width);
/// "word weight" lines in concept order.
std::string concept_table(const std::vector<double>& weights,
                          const std::vector<std::string>& words);

/// Writes attention maps for one sample into out_dir and returns the paths.
/// Captions: step_NN.{txt,pgm} per decode step of the greedy caption.
/// VQA: question_NN.{txt,pgm} per question. Semantic variants also write
/// regions_semantic.{txt,pgm} and concepts.txt.
std::vector<std::filesystem::path> export_attention(const TaskModel& model,
                                                    const Vocabulary& vocab,
                                                    const Sample& sample,
                                                    const std::filesystem::path& out_dir);

/// The toy answer taxonomy shipped as data/taxonomy.txt.
const std::string& builtin_taxonomy_text();

}  // namespace datn
