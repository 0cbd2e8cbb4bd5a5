// SPDX-License-Identifier: Apache-2.0
// Command-line front end: gen-data, train, eval, ablate, export-attn.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datn/checkpoint.hpp"
#include "datn/config.hpp"
#include "datn/dataset_io.hpp"
#include "datn/harness.hpp"
#include "datn/kv.hpp"
#include "datn/metrics.hpp"
#include "datn/world.hpp"

namespace fs = std::filesystem;
using namespace datn;

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

// One string-valued option per RunConfig key; only the ones given are applied.
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value run config file");
    for (const auto& key : RunConfig::keys()) {
      options[key] = app->add_option(flag_name(key), values[key], "run config field '" + key + "'")
                         ->group("Run config");
    }
  }

  RunConfig apply(RunConfig base) const {
    if (config_file) base = RunConfig::load(*config_file);
    for (const auto& key : RunConfig::keys()) {
      if (options.at(key)->count()) base.set(key, values.at(key));
    }
    return base;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

Taxonomy taxonomy_from(const std::optional<std::string>& path) {
  return path ? Taxonomy::load(*path) : Taxonomy::parse(builtin_taxonomy_text());
}

const std::vector<Sample>& pick_split(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.train;
  if (split == "test") return ds.test;
  throw std::invalid_argument("unknown split '" + split + "' (expected train or test)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    seeds.push_back(parse_u64({"seeds", item, 0}, "--seeds"));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-attention captioning and VQA on a synthetic scene world"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
  std::string gen_out;
  std::uint64_t gen_seed = 7;
  std::size_t gen_train = 256, gen_test = 64;
  std::optional<std::string> world_file;
  WorldConfig world;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--train", gen_train, "training samples");
  gen->add_option("--test", gen_test, "test samples");
  gen->add_option("--world", world_file, "world.cfg to start from");
  auto* o_canvas = gen->add_option("--canvas", world.canvas, "canvas side in pixels");
  auto* o_grid = gen->add_option("--grid", world.grid, "grid cells per side");
  auto* o_min = gen->add_option("--min-objects", world.min_objects, "fewest objects per scene");
  auto* o_max = gen->add_option("--max-objects", world.max_objects, "most objects per scene");
  auto* o_q = gen->add_option("--questions", world.questions_per_sample, "questions per sample");
  auto* o_mc = gen->add_option("--min-count", world.min_count, "vocabulary frequency cutoff");
  auto* o_c = gen->add_option("--concepts", world.concepts, "concept vocabulary size");

  // train
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  ConfigFlags train_cfg;
  std::string train_data, train_out;
  std::optional<std::string> resume;
  std::optional<std::uint64_t> max_steps;
  bool quiet = false;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--max-steps", max_steps, "stop after this many head steps");
  train->add_flag("--quiet", quiet, "suppress per-epoch progress");
  train_cfg.attach(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or a candidate corpus");
  std::optional<std::string> ck_path, eval_data, corpus_path, taxonomy_path, json_out, expect_task;
  std::string eval_split = "test";
  eval->add_option("--checkpoint", ck_path, "model.ckpt to evaluate");
  eval->add_option("--data", eval_data, "dataset directory");
  eval->add_option("--split", eval_split, "train or test");
  eval->add_option("--task", expect_task, "reject checkpoints of another task");
  eval->add_option("--corpus", corpus_path, "JSONL of {candidate, references}");
  eval->add_option("--taxonomy", taxonomy_path, "taxonomy for WUPS");
  eval->add_option("--json", json_out, "also write the report as JSON");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and evaluate every ablation variant");
  ConfigFlags ablate_cfg;
  std::string ablate_data, ablate_out, seeds_text = "1,2,3,4,5";
  std::optional<std::string> ablate_taxonomy;
  ablate->add_option("--data", ablate_data, "dataset directory")->required();
  ablate->add_option("--out", ablate_out, "directory for table.txt and table.json")->required();
  ablate->add_option("--seeds", seeds_text, "comma-separated seeds");
  ablate->add_option("--taxonomy", ablate_taxonomy, "taxonomy for WUPS");
  ablate_cfg.attach(ablate);

  // export-attn
  auto* exp = app.add_subcommand("export-attn", "write attention maps for one sample");
  std::string exp_ck, exp_data, exp_out, exp_split = "test";
  std::size_t exp_sample = 0;
  exp->add_option("--checkpoint", exp_ck, "model.ckpt to inspect")->required();
  exp->add_option("--data", exp_data, "dataset directory")->required();
  exp->add_option("--sample", exp_sample, "sample index within the split");
  exp->add_option("--split", exp_split, "train or test");
  exp->add_option("--out", exp_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      WorldConfig w;
      if (world_file) w = world_from_text(read_text_file(*world_file));
      if (o_canvas->count()) w.canvas = world.canvas;
      if (o_grid->count()) w.grid = world.grid;
      if (o_min->count()) w.min_objects = world.min_objects;
      if (o_max->count()) w.max_objects = world.max_objects;
      if (o_q->count()) w.questions_per_sample = world.questions_per_sample;
      if (o_mc->count()) w.min_count = world.min_count;
      if (o_c->count()) w.concepts = world.concepts;
      const auto ds = generate_dataset(gen_seed, gen_train, gen_test, w);
      save_dataset(ds, gen_out);
      std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size()
                << " test samples, vocabulary " << ds.vocab.size() << " to " << gen_out << "\n";
      return 0;
    }

    if (train->parsed()) {
      const auto ds = load_dataset(train_data);
      RunConfig base;
      if (resume) base = RunConfig::from_text(load_checkpoint(*resume).config_text, *resume);
      const auto config = train_cfg.apply(base);
      TrainOptions opts;
      opts.out_dir = train_out;
      if (resume) opts.resume = fs::path(*resume);
      opts.stop_after = max_steps;
      if (!quiet) opts.progress = [](const std::string& m) { std::cerr << m << "\n"; };
      const auto r = run_training(config, ds, opts);
      std::cout << "step " << r.step << "/" << r.total_steps;
      if (r.losses.empty()) {
        std::cout << " (nothing left to train)";
      } else {
        std::cout << " loss " << r.losses.back().loss;
      }
      std::cout << " -> " << (fs::path(train_out) / "model.ckpt").string() << "\n";
      return 0;
    }

    if (eval->parsed()) {
      MetricsReport report;
      if (corpus_path) {
        if (ck_path) throw std::invalid_argument("eval: give either --corpus or --checkpoint");
        const auto corpus = load_eval_corpus(*corpus_path);
        report.task = Task::kCaption;
        for (std::size_t n = 1; n <= 4; ++n) report.values.emplace_back("bleu" + std::to_string(n), bleu(corpus, n));
        report.values.emplace_back("cider", cider(corpus));
      } else {
        if (!ck_path || !eval_data) throw std::invalid_argument("eval: --checkpoint and --data are required");
        const auto ds = load_dataset(*eval_data);
        const auto model = load_task_model(load_checkpoint(*ck_path), ds.vocab.size());
        if (expect_task && parse_task(*expect_task) != model.config.task) {
          throw std::invalid_argument("eval: checkpoint task is '" + to_string(model.config.task) +
                                      "', expected '" + *expect_task + "'");
        }
        report = evaluate(model, ds.vocab, pick_split(ds, eval_split), taxonomy_from(taxonomy_path));
      }
      std::cout << report.to_table();
      if (json_out) write_text(*json_out, report.to_json() + "\n");
      return 0;
    }

    if (ablate->parsed()) {
      const auto ds = load_dataset(ablate_data);
      const auto config = ablate_cfg.apply(RunConfig{});
      const auto table = run_ablation_suite(config, ds, parse_seeds(seeds_text), taxonomy_from(ablate_taxonomy),
                                            [](const std::string& m) { std::cerr << m << "\n"; });
      fs::create_directories(ablate_out);
      write_text(fs::path(ablate_out) / "table.txt", table.to_table());
      write_text(fs::path(ablate_out) / "table.json", table.to_json() + "\n");
      std::cout << table.to_table();
      return 0;
    }

    if (exp->parsed()) {
      const auto ds = load_dataset(exp_data);
      const auto model = load_task_model(load_checkpoint(exp_ck), ds.vocab.size());
      const auto& split = pick_split(ds, exp_split);
      if (exp_sample >= split.size()) {
        throw std::invalid_argument("export-attn: sample " + std::to_string(exp_sample) + " out of range (split has " +
                                    std::to_string(split.size()) + ")");
      }
      for (const auto& p : export_attention(model, ds.vocab, split[exp_sample], exp_out)) {
        std::cout << p.string() << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
