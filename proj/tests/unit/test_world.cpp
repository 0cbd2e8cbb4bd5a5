// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "datn/dataset_io.hpp"
#include "datn/world.hpp"

using namespace datn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("datn_world_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WorldConfig small_world() {
  WorldConfig w;
  w.min_count = 1;
  w.concepts = 8;
  return w;
}

}  // namespace

TEST_SUITE("synthetic-world") {

TEST_CASE("world config rejects more objects than cells") {
  WorldConfig w;
  w.grid = 1;
  w.canvas = 4;
  w.max_objects = 2;
  CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("grid has only 1 cells"), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(1, 4, 4, w), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(1, 0, 4, WorldConfig{}), std::invalid_argument);
}

TEST_CASE("scene objects never share a cell, colour or size-shape pair") {
  const WorldConfig w;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto objs = sample_objects(seed, w);
    REQUIRE(objs.size() >= w.min_objects);
    REQUIRE(objs.size() <= w.max_objects);
    std::set<std::size_t> cells;
    std::set<int> colors;
    std::set<std::pair<int, int>> kinds;
    for (const auto& o : objs) {
      cells.insert(o.cell(w.grid));
      colors.insert(static_cast<int>(o.color));
      kinds.insert({static_cast<int>(o.size), static_cast<int>(o.shape)});
      CHECK(o.row < w.grid);
      CHECK(o.col < w.grid);
    }
    CHECK(cells.size() == objs.size());
    CHECK(colors.size() == objs.size());
    CHECK(kinds.size() == objs.size());
    CHECK(sample_objects(seed, w) == objs);
  }
}

TEST_CASE("rendering is deterministic, bounded and draws inside the object's cell") {
  const WorldConfig w;
  const std::vector<SceneObject> objs{{ShapeKind::kSquare, ColorKind::kRed, SizeKind::kLarge, 2, 1}};
  const auto canvas = render_canvas(objs, w);
  REQUIRE(canvas.size() == w.canvas * w.canvas * 3);
  CHECK(canvas == render_canvas(objs, w));
  const std::size_t cell = w.canvas / w.grid;
  for (std::size_t y = 0; y < w.canvas; ++y) {
    for (std::size_t x = 0; x < w.canvas; ++x) {
      const bool inside = y / cell == 2 && x / cell == 1;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = canvas[(y * w.canvas + x) * 3 + ch];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (!inside) CHECK(v == 0.0);
      }
    }
  }
  // Red: the green and blue channels stay dark.
  const std::size_t cy = 2 * cell + cell / 2, cx = cell + cell / 2;
  CHECK(canvas[(cy * w.canvas + cx) * 3 + 0] > 0.5);
  CHECK(canvas[(cy * w.canvas + cx) * 3 + 1] == 0.0);
}

TEST_CASE("templates: a red circle is described and asked about") {
  const std::vector<SceneObject> objs{{ShapeKind::kCircle, ColorKind::kRed, SizeKind::kSmall, 0, 3}};
  const auto words = split_words(caption_text(objs, 4));
  CHECK(std::count(words.begin(), words.end(), "red") == 1);
  CHECK(std::count(words.begin(), words.end(), "circle") == 1);
  CHECK(caption_text(objs, 4) == "one small red circle at the top right");

  const auto color_q = question_text(objs, 4, QuestionType::kColor, 0);
  CHECK(color_q.question == "what color is the small circle");
  CHECK(color_q.answer == "red");
  CHECK(question_text(objs, 4, QuestionType::kObject, 0).answer == "circle");
  CHECK(question_text(objs, 4, QuestionType::kNumber, 0).answer == "one");
  CHECK(question_text(objs, 4, QuestionType::kLocation, 0).answer == "top-right");
}

TEST_CASE("two-object captions name the relation between the first two colours") {
  const std::vector<SceneObject> objs{
      {ShapeKind::kSquare, ColorKind::kBlue, SizeKind::kLarge, 1, 0},
      {ShapeKind::kTriangle, ColorKind::kRed, SizeKind::kSmall, 1, 2},
  };
  CHECK(caption_text(objs, 4) == "two objects with a small red triangle right of a large blue square");
}

TEST_CASE("question type frequencies follow the configured mix within 2%") {
  WorldConfig w = small_world();
  w.question_mix = {0.4, 0.1, 0.3, 0.2};
  const auto ds = generate_dataset(3, 900, 100, w);
  std::array<double, kNumQuestionTypes> counts{};
  double total = 0.0;
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& s : *split) {
      for (const auto& q : s.qa) {
        counts[static_cast<std::size_t>(q.type)] += 1.0;
        total += 1.0;
      }
    }
  }
  for (std::size_t t = 0; t < kNumQuestionTypes; ++t) {
    CHECK(std::abs(counts[t] / total - w.question_mix[t]) <= 0.02);
  }
}

TEST_CASE("generated samples satisfy the dataset invariants") {
  const auto ds = generate_dataset(11, 64, 16, small_world());
  std::set<std::uint64_t> train_seeds, test_seeds;
  for (const auto& s : ds.train) train_seeds.insert(s.scene.seed);
  for (const auto& s : ds.test) test_seeds.insert(s.scene.seed);
  for (auto seed : test_seeds) CHECK(train_seeds.count(seed) == 0);

  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& s : *split) {
      REQUIRE_FALSE(s.captions.empty());
      for (const auto& c : s.captions) {
        CHECK(c.front() == kStartId);
        CHECK(c.back() == kEndId);
      }
      CHECK(s.concept_labels == concept_labels_from(s.captions, ds.vocab));
      for (std::size_t j = 0; j < ds.vocab.concept_count(); ++j) {
        bool present = false;
        for (const auto& c : s.captions) {
          present = present || std::find(c.begin(), c.end(), ds.vocab.concept_ids()[j]) != c.end();
        }
        CHECK(s.concept_labels[j] == (present ? 1.0 : 0.0));
      }
      for (const auto& q : s.qa) {
        CHECK(q.answer >= 0);
        CHECK(static_cast<std::size_t>(q.answer) < ds.vocab.answer_count());
      }
    }
  }
  std::set<QuestionType> types;
  for (const auto& s : ds.train) {
    for (const auto& q : s.qa) types.insert(q.type);
  }
  CHECK(types.size() == kNumQuestionTypes);
}

TEST_CASE("build_vocab: frequency cutoff, stopwords and the top-c list") {
  std::vector<std::vector<std::string>> caps;
  for (int i = 0; i < 10; ++i) caps.push_back({"a", "circle"});
  caps.push_back({"zebra"});
  const auto v = build_vocab(caps, {}, 5, 1, answer_words());
  CHECK(v.contains("circle"));
  CHECK_FALSE(v.contains("zebra"));
  CHECK(v.concept_words() == std::vector<std::string>{"circle"});
  CHECK(v.token(0) == "<start>");
  CHECK(v.token(3) == "<pad>");

  // min_count = 1 and c = number of eligible words selects all of them.
  const std::vector<std::vector<std::string>> caps2{{"the", "red", "box"}, {"red", "cat", "of", "a"}};
  const auto all = build_vocab(caps2, {}, 1, 3, answer_words());
  auto words = all.concept_words();
  std::sort(words.begin(), words.end());
  CHECK(words == std::vector<std::string>{"box", "cat", "red"});
  CHECK_THROWS_WITH_AS(build_vocab(caps2, {}, 1, 4, answer_words()), doctest::Contains("requested 4"),
                       std::invalid_argument);

  // Independent frequency-count oracle on a generated corpus.
  const auto ds = generate_dataset(5, 200, 10, WorldConfig{});
  std::map<std::string, int> freq;
  for (const auto& s : ds.train) {
    for (const auto& w : split_words(ds.vocab.decode(s.captions[0]))) {
      if (w[0] != '<' && !is_stopword(w)) ++freq[w];
    }
  }
  std::vector<std::pair<int, std::string>> ranked;
  for (const auto& [w, n] : freq) ranked.emplace_back(-n, w);
  std::sort(ranked.begin(), ranked.end());
  REQUIRE(ranked.size() >= ds.vocab.concept_count());
  for (std::size_t j = 0; j < ds.vocab.concept_count(); ++j) {
    CHECK(ds.vocab.concept_words()[j] == ranked[j].second);
  }
  CHECK(ds.vocab.concept_count() == 24);
}

TEST_CASE("dataset persistence round-trips and is byte-stable") {
  const auto ds = generate_dataset(7, 10, 4, small_world());
  const auto a = scratch("a"), b = scratch("b");
  save_dataset(ds, a);
  save_dataset(generate_dataset(7, 10, 4, small_world()), b);
  for (const char* f : {"world.cfg", "vocab.txt", "train.jsonl", "test.jsonl"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto back = load_dataset(a);
  CHECK(back.vocab == ds.vocab);
  REQUIRE(back.train.size() == ds.train.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].scene.seed == ds.train[i].scene.seed);
    CHECK(back.train[i].scene.objects == ds.train[i].scene.objects);
    CHECK(back.train[i].scene.canvas == ds.train[i].scene.canvas);
    CHECK(back.train[i].captions == ds.train[i].captions);
    CHECK(back.train[i].qa == ds.train[i].qa);
    CHECK(back.train[i].concept_labels == ds.train[i].concept_labels);
  }
  CHECK(world_to_text(back.world) == world_to_text(ds.world));

  // Recorded once from this exact configuration.
  CHECK(file_fingerprint(a / "train.jsonl") == 0xb0bf6b001a89d3b6ULL);
}

TEST_CASE("file fingerprint is 64-bit FNV-1a") {
  const auto dir = scratch("fnv");
  std::ofstream(dir / "empty").close();
  std::ofstream(dir / "a") << "a";
  CHECK(file_fingerprint(dir / "empty") == 0xcbf29ce484222325ULL);
  CHECK(file_fingerprint(dir / "a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("malformed dataset files are rejected with line and field") {
  const auto ds = generate_dataset(7, 3, 2, small_world());
  const auto dir = scratch("bad");
  save_dataset(ds, dir);
  auto lines = slurp(dir / "train.jsonl");
  const auto pos = lines.find("<start> ");
  REQUIRE(pos != std::string::npos);
  lines.replace(pos, 8, "<start> zebra ");
  std::ofstream(dir / "train.jsonl", std::ios::trunc) << lines;
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("zebra"), FormatError);
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("train.jsonl:1"), FormatError);

  std::ofstream(dir / "train.jsonl", std::ios::trunc) << "{not json\n";
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("train.jsonl:1"), FormatError);

  std::ofstream(dir / "world.cfg", std::ios::app) << "colour = 3\n";
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("colour"), FormatError);
}

}  // TEST_SUITE
