// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "datn/checkpoint.hpp"
#include "datn/config.hpp"
#include "datn/dataset_io.hpp"
#include "datn/harness.hpp"
#include "datn/world.hpp"

using namespace datn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("datn_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Dataset& small_data() {
  static const Dataset ds = [] {
    WorldConfig w;
    w.min_count = 1;
    w.concepts = 8;
    return generate_dataset(7, 24, 8, w);
  }();
  return ds;
}

RunConfig small_config(Task task) {
  RunConfig c;
  c.task = task;
  c.concepts = 8;
  c.region_width = 8;
  c.similarity = 6;
  c.hidden = 12;
  c.question = 8;
  c.joint = 6;
  c.concept_channels = 4;
  c.epochs = 3;
  c.concept_epochs = 2;
  c.batch_size = 4;
  c.max_caption_length = 12;
  return c;
}

}  // namespace

TEST_SUITE("harness-cli") {

TEST_CASE("run config: text round trip, overrides and errors") {
  RunConfig c;
  c.task = Task::kVqa;
  c.ablation = "qa";
  c.optimizer.learning_rate = 0.0025;
  c.threshold = 0.35;
  const auto back = RunConfig::from_text(c.to_text(), "mem");
  CHECK(back == c);
  CHECK(back.to_text() == c.to_text());
  for (const auto& key : RunConfig::keys()) CHECK(back.get(key) == c.get(key));

  RunConfig d;
  d.set("epochs", "7");
  CHECK(d.epochs == 7);
  CHECK_THROWS_WITH_AS(d.set("epoch", "7"), doctest::Contains("epoch"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(d.set("epochs", "seven"), doctest::Contains("epochs"), std::invalid_argument);
  CHECK_THROWS(RunConfig::from_text("epochs = 3\nbogus = 1\n", "cfg"));

  RunConfig bad_grid;
  bad_grid.grid = 3;
  CHECK_THROWS_AS(bad_grid.validate(), std::invalid_argument);
  RunConfig bad_ablation;
  bad_ablation.ablation = "qa";  // a VQA variant on the caption task
  CHECK_THROWS_WITH_AS(bad_ablation.validate(), doctest::Contains("ablation"), std::invalid_argument);
  RunConfig zero_epochs;
  zero_epochs.epochs = 0;
  CHECK_THROWS_AS(zero_epochs.validate(), std::invalid_argument);

  // c must match the dataset's concept vocabulary before training starts.
  RunConfig wrong_c = small_config(Task::kCaption);
  wrong_c.concepts = 9;
  CHECK_THROWS_WITH_AS(run_training(wrong_c, small_data(), {}), doctest::Contains("concepts"), std::invalid_argument);

  // Full and WSA differ only in the gate.
  RunConfig full, wsa;
  wsa.ablation = "wsa";
  CHECK(full.caption_variant() == CaptionVariant::kFull);
  CHECK(wsa.caption_variant() == CaptionVariant::kWordSemantic);
  CHECK(ablation_variants(Task::kCaption) == std::vector<std::string>{"none_att", "wa", "wsa", "full"});
  CHECK(ablation_variants(Task::kVqa) == std::vector<std::string>{"none_att", "qa", "sa", "full"});
}

TEST_CASE("checkpoint: byte round trip and malformed input") {
  Checkpoint ck;
  ck.config_text = RunConfig{}.to_text();
  ck.step = 42;
  ck.records.push_back({"a", {2, 3}, {1, 2, 3, 4, 5, -0.0}});
  ck.records.push_back({"b", {1}, {std::nextafter(1.0, 2.0)}});
  const auto bytes = serialize_checkpoint(ck);
  CHECK(bytes.substr(0, 4) == "DATN");
  const auto back = parse_checkpoint(bytes, "mem");
  CHECK(back == ck);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(std::signbit(back.at("a").values[5]));

  const auto dir = scratch("ck");
  save_checkpoint(ck, dir / "x.ckpt");
  CHECK(slurp(dir / "x.ckpt") == bytes);
  CHECK(load_checkpoint(dir / "x.ckpt") == ck);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad, "mem"), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 3), "mem"), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x", "mem"), FormatError);
  auto future = bytes;
  future[4] = 9;
  CHECK_THROWS_WITH_AS(parse_checkpoint(future, "mem"), doctest::Contains("version"), FormatError);

  ParamList params{{"a", Tensor::zeros({3, 2}, true)}};
  CHECK_THROWS_AS(restore_params(ck, params), std::invalid_argument);
  ParamList missing{{"zz", Tensor::zeros({1}, true)}};
  CHECK_THROWS(restore_params(ck, missing));
  ParamList good{{"a", Tensor::zeros({2, 3}, true)}};
  restore_params(ck, good);
  CHECK(good[0].tensor.at(1, 1) == 5.0);
}

TEST_CASE("loss log: exact double round trip") {
  const std::vector<LossRecord> log{{0, 3.14159}, {1, 0.1 + 0.2}, {2, 1e-300}};
  const auto text = format_loss_log(log);
  CHECK(text.rfind("step loss\n", 0) == 0);
  CHECK(parse_loss_log(text, "mem") == log);
  CHECK_THROWS_AS(parse_loss_log("step loss\n0 abc\n", "mem"), FormatError);
}

TEST_CASE("training is byte-reproducible and resumes exactly") {
  for (auto task : {Task::kCaption, Task::kVqa}) {
    const auto config = small_config(task);
    const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
    TrainOptions oa;
    oa.out_dir = a;
    const auto ra = run_training(config, small_data(), oa);
    TrainOptions ob;
    ob.out_dir = b;
    run_training(config, small_data(), ob);
    for (const char* f : {"model.ckpt", "loss.log", "concept_loss.log", "config.txt"}) {
      INFO(to_string(task) << " " << f);
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(ra.step == ra.total_steps);
    CHECK(ra.losses.size() == ra.total_steps);

    // Interrupt at k, then resume in the same directory.
    const std::uint64_t k = ra.total_steps / 2 + 1;
    TrainOptions oc;
    oc.out_dir = c;
    oc.stop_after = k;
    CHECK(run_training(config, small_data(), oc).step == k);
    CHECK(load_checkpoint(c / "model.ckpt").step == k);
    oc.stop_after.reset();
    oc.resume = c / "model.ckpt";
    const auto rc = run_training(config, small_data(), oc);
    CHECK(rc.losses.size() == ra.total_steps - k);
    CHECK(slurp(c / "model.ckpt") == slurp(a / "model.ckpt"));
    CHECK(slurp(c / "loss.log") == slurp(a / "loss.log"));

    // A checkpoint only resumes under the config it was written with.
    auto other = config;
    other.seed = 2;
    TrainOptions od;
    od.out_dir = scratch("d");
    od.resume = a / "model.ckpt";
    CHECK_THROWS_WITH_AS(run_training(other, small_data(), od), doctest::Contains("different config"),
                         std::invalid_argument);

    // Loading and re-saving a checkpoint is byte-stable.
    const auto ck = load_checkpoint(a / "model.ckpt");
    const auto model = load_task_model(ck, small_data().vocab.size());
    CHECK(model.config == config);
    save_checkpoint(ck, c / "again.ckpt");
    CHECK(slurp(c / "again.ckpt") == slurp(a / "model.ckpt"));
  }
}

TEST_CASE("default caption config: loss at step 200 is below step 0 and matches the baseline") {
  const auto ds = generate_dataset(7, 256, 64, WorldConfig{});
  RunConfig config;
  TrainOptions opts;
  opts.stop_after = 201;
  const auto r = run_training(config, ds, opts);
  REQUIRE(r.losses.size() == 201);
  CHECK(r.losses[200].loss < r.losses[0].loss);
  // Recorded baseline; a change here means training numerics changed.
  CHECK(r.losses[0].loss == doctest::Approx(45.127407859029567).epsilon(1e-12));
  CHECK(r.losses[200].loss == doctest::Approx(6.9162145481762476).epsilon(1e-12));
}

TEST_CASE("evaluation reports: metric names and per-type arithmetic") {
  const auto tax = Taxonomy::parse(builtin_taxonomy_text());
  const auto vqa = run_training(small_config(Task::kVqa), small_data(), {});
  const auto rep = evaluate(vqa.model, small_data().vocab, small_data().test, tax);
  CHECK(rep.task == Task::kVqa);
  double weighted = 0.0, count = 0.0;
  for (const char* t : {"object", "number", "color", "location"}) {
    const double n = rep.get(std::string("count_") + t);
    weighted += n * rep.get(std::string("accuracy_") + t);
    count += n;
  }
  REQUIRE(count > 0);
  CHECK(std::abs(weighted / count - rep.get("accuracy")) < 1e-12);
  CHECK(rep.get("wups_0.0") >= rep.get("wups_0.9") - 1e-12);
  CHECK(rep.get("wups_0.9") >= rep.get("accuracy") - 1e-12);
  CHECK(rep.to_json().find("\"task\":\"vqa\"") != std::string::npos);

  const auto cap = run_training(small_config(Task::kCaption), small_data(), {});
  const auto crep = evaluate(cap.model, small_data().vocab, small_data().test, tax);
  for (const char* k : {"bleu1", "bleu2", "bleu3", "bleu4", "cider", "exact_match"}) CHECK_NOTHROW(crep.get(k));
  CHECK(crep.get("bleu4") <= crep.get("bleu1") + 1e-12);
  CHECK_THROWS(crep.get("accuracy"));

  // Perfect predictions.
  const std::vector<std::string> answers{"red", "two", "top-left", "circle"};
  CHECK(accuracy(answers, answers) == 1.0);
  CHECK(wups(answers, answers, tax, 0.9) == 1.0);
  CHECK(wups(answers, answers, tax, 0.0) == 1.0);
}

TEST_CASE("attention export: normalized grids, graymaps and concept tables") {
  const auto cap = run_training(small_config(Task::kCaption), small_data(), {});
  const auto dir = scratch("export");
  const auto files = export_attention(cap.model, small_data().vocab, small_data().test[0], dir);
  const std::size_t g = cap.model.config.grid;
  std::size_t grids = 0;
  for (const auto& f : files) {
    if (f.extension() == ".txt" && f.stem().string().rfind("step_", 0) == 0) {
      std::istringstream in(slurp(f));
      double sum = 0.0, v = 0.0;
      std::size_t n = 0;
      while (in >> v) {
        sum += v;
        ++n;
      }
      CHECK(n == g * g);
      CHECK(std::abs(sum - 1.0) < 1e-6);
      ++grids;
    }
    if (f.extension() == ".pgm") {
      const auto bytes = slurp(f);
      const std::string header = "P5\n" + std::to_string(g) + " " + std::to_string(g) + "\n255\n";
      CHECK(bytes.rfind(header, 0) == 0);
      CHECK(bytes.size() == header.size() + g * g);
    }
  }
  CHECK(grids >= 1);
  CHECK(fs::exists(dir / "steps.txt"));
  CHECK(fs::exists(dir / "concepts.txt"));
  CHECK(fs::exists(dir / "regions_semantic.txt"));

  CHECK(region_matrix_text({0.25, 0.5, 0.125, 0.125}, 2, 2) == "0.25 0.5\n0.125 0.125\n");
  CHECK(region_pgm({0.5, 0.25, 0.25, 0.0}, 2, 2) == std::string("P5\n2 2\n255\n\xff\x80\x80\x00", 15));
  CHECK(concept_table({0.75, 0.25}, {"red", "circle"}) == "red 0.75\ncircle 0.25\n");
  CHECK_THROWS_AS(region_pgm({1.0}, 2, 2), std::invalid_argument);

  auto none = small_config(Task::kCaption);
  none.ablation = "none_att";
  const auto plain = run_training(none, small_data(), {});
  CHECK_THROWS_AS(export_attention(plain.model, small_data().vocab, small_data().test[0], scratch("none")),
                  std::invalid_argument);

  const auto vqa = run_training(small_config(Task::kVqa), small_data(), {});
  const auto vdir = scratch("export_vqa");
  const auto vfiles = export_attention(vqa.model, small_data().vocab, small_data().test[0], vdir);
  CHECK(fs::exists(vdir / "question_00.txt"));
  CHECK(fs::exists(vdir / "question_00.pgm"));
}

}  // TEST_SUITE
