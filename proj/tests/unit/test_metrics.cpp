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
#include "datn/harness.hpp"
#include "datn/metrics.hpp"
#include "datn/rng.hpp"
#include "datn/vocab.hpp"
#include "datn/world.hpp"
#include "support/metric_oracles.hpp"

using namespace datn;
namespace fs = std::filesystem;
using datn::testing::brute_bleu;
using datn::testing::brute_cider;
using datn::testing::random_corpus;

namespace {

Sentence words(const std::string& s) { return split_words(s); }

EvalCorpus rename(const EvalCorpus& corpus) {
  auto swap_word = [](const std::string& w) { return "x_" + w + "_y"; };
  EvalCorpus out = corpus;
  for (auto& item : out) {
    for (auto& w : item.candidate) w = swap_word(w);
    for (auto& r : item.references) {
      for (auto& w : r) w = swap_word(w);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("bleu: identity, disjoint, clipped precision, errors") {
  const EvalCorpus same{{words("one small red circle at the top"), {words("one small red circle at the top")}}};
  for (std::size_t n = 1; n <= 4; ++n) CHECK(bleu(same, n) == 1.0);
  const EvalCorpus disjoint{{words("blue square"), {words("red circle")}}};
  CHECK(bleu(disjoint, 1) == 0.0);

  const EvalCorpus clipped{{words("the the the the"), {words("the cat")}}};
  const auto p = modified_precision(clipped, 1);
  CHECK(p.matches == 1);
  CHECK(p.total == 4);
  CHECK(static_cast<double>(p.matches) / static_cast<double>(p.total) == 0.25);
  CHECK(bleu(clipped, 1) == 0.25);  // candidate longer than reference: no brevity penalty

  CHECK_THROWS_AS(bleu({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(bleu(same, 0), std::invalid_argument);
  CHECK_THROWS_AS(bleu(same, 5), std::invalid_argument);
}

TEST_CASE("bleu: brevity penalty uses the closest reference, shorter on ties") {
  const EvalCorpus c{{words("a b c"), {words("a b c d e"), words("a b")}}};
  // Distances 2 and 1 -> reference length 2 < 3, no penalty.
  CHECK(bleu(c, 1) == 1.0);
  const EvalCorpus tie{{words("a b c"), {words("a b c d"), words("a b")}}};
  CHECK(bleu(tie, 1) == 1.0);  // tie between 4 and 2 picks 2
  const EvalCorpus short_cand{{words("a b"), {words("a b c d")}}};
  CHECK(std::abs(bleu(short_cand, 1) - std::exp(1.0 - 2.0)) < 1e-15);
}

TEST_CASE("bleu and cider match brute-force oracles on 50 random corpora") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto corpus = random_corpus(rng);
    for (std::size_t n = 1; n <= 4; ++n) {
      INFO("trial " << trial << " order " << n);
      CHECK(std::abs(bleu(corpus, n) - brute_bleu(corpus, n)) < 1e-9);
    }
    CHECK(std::abs(cider(corpus) - brute_cider(corpus)) < 1e-9);
  }
}

TEST_CASE("cider: orthogonal, single identical item, renaming, maximal corpus") {
  const EvalCorpus disjoint{{words("blue square"), {words("red circle")}}};
  CHECK(cider(disjoint) == 0.0);
  const EvalCorpus one{{words("a small red circle"), {words("a small red circle")}}};
  CHECK(std::abs(cider(one) - 10.0) < 1e-12);

  EvalCorpus all_match;
  for (const char* s : {"one red circle at the top", "two objects near a square", "a big blue triangle"}) {
    all_match.push_back({words(s), {words(s)}});
  }
  CHECK(std::abs(cider(all_match) - 10.0) < 1e-12);
  CHECK(bleu(all_match, 4) == 1.0);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto corpus = random_corpus(rng);
    CHECK(std::abs(cider(corpus) - cider(rename(corpus))) < 1e-12);
    CHECK(std::abs(bleu(corpus, 4) - bleu(rename(corpus), 4)) < 1e-12);
  }
  CHECK_THROWS_AS(cider({}), std::invalid_argument);
}

TEST_CASE("corpus metrics are permutation invariant") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto corpus = random_corpus(rng);
    const double b = bleu(corpus, 4), c = cider(corpus);
    std::reverse(corpus.begin(), corpus.end());
    CHECK(std::abs(bleu(corpus, 4) - b) < 1e-12);
    CHECK(std::abs(cider(corpus) - c) < 1e-12);
  }
  const std::vector<std::string> p{"red", "one", "circle"}, g{"red", "two", "circle"};
  const auto tax = Taxonomy::parse(builtin_taxonomy_text());
  const std::vector<std::string> pr{"circle", "one", "red"}, gr{"circle", "two", "red"};
  CHECK(std::abs(wups(p, g, tax, 0.9) - wups(pr, gr, tax, 0.9)) < 1e-15);
  CHECK(accuracy(p, g) == accuracy(pr, gr));
}

TEST_CASE("appending a non-matching token never raises bleu-4") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto corpus = random_corpus(rng);
    const double before = bleu(corpus, 4);
    for (auto& item : corpus) item.candidate.push_back("zzz");
    CHECK(bleu(corpus, 4) <= before + 1e-15);
  }
}

TEST_CASE("accuracy") {
  CHECK(accuracy({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK(accuracy({"a", "b"}, {"c", "d"}) == 0.0);
  CHECK(accuracy({"a", "b", "c", "d"}, {"a", "b", "c", "x"}) == 0.75);
  CHECK_THROWS_AS(accuracy({"a"}, {"a", "b"}), std::invalid_argument);
}

TEST_CASE("taxonomy and wups on the shipped tree") {
  const auto tax = Taxonomy::parse(builtin_taxonomy_text());
  CHECK(tax.depth("entity") == 1);
  CHECK(tax.depth("color") == 2);
  CHECK(tax.depth("red") == 3);
  CHECK(tax.lowest_common_ancestor("red", "blue") == "color");
  CHECK(tax.lowest_common_ancestor("red", "circle") == "entity");
  CHECK(std::abs(tax.wu_palmer("red", "blue") - 4.0 / 6.0) < 1e-15);
  CHECK(std::abs(wups({"red"}, {"blue"}, tax, 0.9) - 0.1 * 4.0 / 6.0) < 1e-15);
  CHECK(std::abs(wups({"red"}, {"blue"}, tax, 0.5) - 4.0 / 6.0) < 1e-15);
  for (double tau : {0.0, 0.5, 0.9, 1.0}) CHECK(wups({"square", "top-left"}, {"square", "top-left"}, tax, tau) == 1.0);

  const std::vector<std::string> p{"red", "one", "circle", "top-left"}, g{"green", "four", "square", "bottom-right"};
  double plain = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) plain += tax.wu_palmer(p[i], g[i]);
  CHECK(std::abs(wups(p, g, tax, 0.0) - plain / 4.0) < 1e-15);
  CHECK(wups(p, g, tax, 0.9) < wups(p, g, tax, 0.0));

  CHECK_THROWS_WITH_AS(wups({"zebra"}, {"red"}, tax, 0.9), doctest::Contains("zebra"), std::invalid_argument);
}

TEST_CASE("taxonomy parse errors") {
  CHECK_THROWS_AS(Taxonomy::parse("root\n   odd\n"), FormatError);
  CHECK_THROWS_AS(Taxonomy::parse("root\n  two words\n"), FormatError);
  CHECK_THROWS_AS(Taxonomy::parse("root\nsecond\n"), FormatError);
  CHECK_THROWS_AS(Taxonomy::parse("root\n    skipped\n"), FormatError);
  CHECK_THROWS_AS(Taxonomy::parse("root\n  a\n  a\n"), FormatError);
  const auto t = Taxonomy::parse("root\n  a\n    b\n  c\n");
  CHECK(t.size() == 4);
  CHECK(t.depth("b") == 3);
  CHECK(t.lowest_common_ancestor("b", "c") == "root");
}

TEST_CASE("the shipped taxonomy file equals the built-in tree and covers every answer") {
  std::ifstream in(fs::path(DATN_SOURCE_DIR) / "data" / "taxonomy.txt", std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == builtin_taxonomy_text());
  const auto tax = Taxonomy::parse(ss.str());
  for (const auto& w : answer_words()) CHECK(tax.contains(w));
}

TEST_CASE("eval corpus file: parsed and rejected with line numbers") {
  const auto dir = fs::temp_directory_path() / "datn_metrics_corpus";
  fs::create_directories(dir);
  std::ofstream(dir / "ok.jsonl", std::ios::trunc)
      << R"({"candidate": "a red circle", "references": ["a red circle", "one red circle"]})" << "\n"
      << R"({"candidate": "two objects", "references": ["two objects near a square"]})" << "\n";
  const auto c = load_eval_corpus(dir / "ok.jsonl");
  REQUIRE(c.size() == 2);
  CHECK(c[0].candidate == words("a red circle"));
  CHECK(c[0].references.size() == 2);

  std::ofstream(dir / "bad.jsonl", std::ios::trunc)
      << R"({"candidate": "a", "references": ["a"]})" << "\n"
      << R"({"candidate": "a", "references": []})" << "\n";
  CHECK_THROWS_WITH(load_eval_corpus(dir / "bad.jsonl"), doctest::Contains("bad.jsonl:2"));
}

}  // TEST_SUITE
