// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace datn {

using Sentence = std::vector<std::string>;

struct EvalItem {
  Sentence candidate;
  std::vector<Sentence> references;
};
using EvalCorpus = std::vector<EvalItem>;

struct ClippedCount {
  std::size_t matches = 0;  // clipped n-gram matches summed over the corpus
  std::size_t total = 0;    // candidate n-grams summed over the corpus
};

/// Corpus-level modified n-gram precision for one order.
ClippedCount modified_precision(const EvalCorpus& corpus, std::size_t order);

/// Cumulative corpus BLEU-n: brevity penalty times the geometric mean of the
/// modified precisions of orders 1..n. No smoothing: any order with zero
/// matches (or no candidate n-grams) gives 0.
double bleu(const EvalCorpus& corpus, std::size_t n);

/// CIDEr over orders 1..4: 10 x mean over orders of the average cosine
/// between tf-idf vectors of candidate and each reference, averaged over
/// items. Document frequencies count items whose references contain the
/// n-gram; idf = ln((N + 1) / max(1, df)).
double cider(const EvalCorpus& corpus);
std::vector<double> cider_per_item(const EvalCorpus& corpus);

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds);

/// Rooted tree over words; the root has depth 1.
class Taxonomy {
 public:
  /// Indented tree text: one token per line, two spaces per depth level.
  static Taxonomy parse(const std::string& text);
  static Taxonomy load(const std::filesystem::path& path);

  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t depth(const std::string& token) const;
  std::string lowest_common_ancestor(const std::string& a, const std::string& b) const;
  /// 2 depth(lca) / (depth(a) + depth(b)).
  double wu_palmer(const std::string& a, const std::string& b) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::size_t lookup(const std::string& token) const;
  std::vector<std::string> names_;
  std::vector<std::size_t> parent_;  // root is its own parent
  std::vector<std::size_t> depth_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Mean over pairs of s when s >= threshold else 0.1 s, s = Wu-Palmer.
double wups(const std::vector<std::string>& predictions, const std::vector<std::string>& golds,
            const Taxonomy& taxonomy, double threshold);

/// Loads a JSONL file of {"candidate": "...", "references": ["...", ...]}.
EvalCorpus load_eval_corpus(const std::filesystem::path& path);

}  // namespace datn
