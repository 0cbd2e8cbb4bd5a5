// SPDX-License-Identifier: Apache-2.0
#include "datn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "datn/dataset_io.hpp"
#include "datn/vocab.hpp"

namespace datn {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Sentence& s, std::size_t n) {
  NgramCounts out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[std::vector<std::string>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                   s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

void require_corpus(const EvalCorpus& corpus, const char* what) {
  if (corpus.empty()) throw std::invalid_argument(std::string(what) + ": empty corpus");
  for (const auto& item : corpus) {
    if (item.references.empty()) {
      throw std::invalid_argument(std::string(what) + ": item without references");
    }
  }
}

}  // namespace

ClippedCount modified_precision(const EvalCorpus& corpus, std::size_t order) {
  ClippedCount c;
  for (const auto& item : corpus) {
    const auto cand = ngrams(item.candidate, order);
    NgramCounts max_ref;
    for (const auto& ref : item.references) {
      for (const auto& [g, n] : ngrams(ref, order)) max_ref[g] = std::max(max_ref[g], n);
    }
    for (const auto& [g, n] : cand) {
      c.total += n;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) c.matches += std::min(n, it->second);
    }
  }
  return c;
}

double bleu(const EvalCorpus& corpus, std::size_t n) {
  require_corpus(corpus, "bleu");
  if (n < 1 || n > 4) throw std::invalid_argument("bleu: order must be in 1..4");
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto c = modified_precision(corpus, k);
    if (c.total == 0 || c.matches == 0) return 0.0;
    log_sum += std::log(static_cast<double>(c.matches) / static_cast<double>(c.total));
  }
  std::size_t cand_len = 0, ref_len = 0;
  for (const auto& item : corpus) {
    const std::size_t cl = item.candidate.size();
    cand_len += cl;
    std::size_t best = item.references[0].size();
    for (const auto& r : item.references) {
      const auto d = [cl](std::size_t len) { return len > cl ? len - cl : cl - len; };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    ref_len += best;
  }
  if (cand_len == 0) return 0.0;
  const double bp = cand_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum / static_cast<double>(n));
}

std::vector<double> cider_per_item(const EvalCorpus& corpus) {
  require_corpus(corpus, "cider");
  constexpr std::size_t kMaxOrder = 4;
  const double n_items = static_cast<double>(corpus.size());
  std::vector<double> scores(corpus.size(), 0.0);
  for (std::size_t order = 1; order <= kMaxOrder; ++order) {
    std::map<std::vector<std::string>, std::size_t> df;
    for (const auto& item : corpus) {
      std::set<std::vector<std::string>> seen;
      for (const auto& r : item.references)
        for (const auto& [g, n] : ngrams(r, order)) seen.insert(g);
      for (const auto& g : seen) ++df[g];
    }
    auto idf = [&](const std::vector<std::string>& g) {
      auto it = df.find(g);
      const double d = it == df.end() ? 1.0 : static_cast<double>(it->second);
      return std::log((n_items + 1.0) / d);
    };
    auto vec = [&](const Sentence& s) {
      std::map<std::vector<std::string>, double> v;
      for (const auto& [g, n] : ngrams(s, order)) v[g] = static_cast<double>(n) * idf(g);
      return v;
    };
    auto norm = [](const std::map<std::vector<std::string>, double>& v) {
      double s = 0.0;
      for (const auto& [g, x] : v) s += x * x;
      return std::sqrt(s);
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto cv = vec(corpus[i].candidate);
      const double cn = norm(cv);
      double acc = 0.0;
      for (const auto& r : corpus[i].references) {
        const auto rv = vec(r);
        const double rn = norm(rv);
        if (cn == 0.0 || rn == 0.0) continue;
        double dot = 0.0;
        for (const auto& [g, x] : cv) {
          auto it = rv.find(g);
          if (it != rv.end()) dot += x * it->second;
        }
        acc += dot / (cn * rn);
      }
      scores[i] += acc / static_cast<double>(corpus[i].references.size());
    }
  }
  for (auto& s : scores) s = 10.0 * s / static_cast<double>(kMaxOrder);
  return scores;
}

double cider(const EvalCorpus& corpus) {
  const auto per = cider_per_item(corpus);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

double accuracy(const std::vector<std::string>& predictions,
                const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("accuracy: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += predictions[i] == golds[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

Taxonomy Taxonomy::parse(const std::string& text) {
  Taxonomy t;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  std::vector<std::size_t> stack;  // node index at each depth-1
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    const std::size_t indent = line.find_first_not_of(' ');
    if (indent % 2 != 0) {
      throw FormatError("taxonomy:" + std::to_string(n) + ": indentation must be a multiple of 2");
    }
    const std::size_t level = indent / 2;
    const std::string token = line.substr(indent);
    if (token.find_first_of(" \t") != std::string::npos) {
      throw FormatError("taxonomy:" + std::to_string(n) + ": one token per line");
    }
    if (level == 0 && !t.names_.empty()) {
      throw FormatError("taxonomy:" + std::to_string(n) + ": second root '" + token + "'");
    }
    if (level > stack.size()) {
      throw FormatError("taxonomy:" + std::to_string(n) + ": indentation skips a level");
    }
    if (t.index_.count(token)) {
      throw FormatError("taxonomy:" + std::to_string(n) + ": duplicate token '" + token + "'");
    }
    const std::size_t id = t.names_.size();
    t.names_.push_back(token);
    t.parent_.push_back(level == 0 ? id : stack[level - 1]);
    t.depth_.push_back(level + 1);
    t.index_[token] = id;
    stack.resize(level);
    stack.push_back(id);
  }
  if (t.names_.empty()) throw FormatError("taxonomy: empty");
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::size_t Taxonomy::lookup(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw std::invalid_argument("taxonomy: token '" + token + "' missing");
  return it->second;
}

std::size_t Taxonomy::depth(const std::string& token) const { return depth_[lookup(token)]; }

std::string Taxonomy::lowest_common_ancestor(const std::string& a, const std::string& b) const {
  std::size_t x = lookup(a), y = lookup(b);
  while (depth_[x] > depth_[y]) x = parent_[x];
  while (depth_[y] > depth_[x]) y = parent_[y];
  while (x != y) {
    x = parent_[x];
    y = parent_[y];
  }
  return names_[x];
}

double Taxonomy::wu_palmer(const std::string& a, const std::string& b) const {
  const double lca = static_cast<double>(depth(lowest_common_ancestor(a, b)));
  return 2.0 * lca / static_cast<double>(depth(a) + depth(b));
}

double wups(const std::vector<std::string>& predictions, const std::vector<std::string>& golds,
            const Taxonomy& taxonomy, double threshold) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("wups: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) throw std::invalid_argument("wups: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const double s = taxonomy.wu_palmer(predictions[i], golds[i]);
    total += s >= threshold ? s : 0.1 * s;
  }
  return total / static_cast<double>(golds.size());
}

EvalCorpus load_eval_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  EvalCorpus corpus;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(n);
    try {
      const auto j = nlohmann::json::parse(line);
      EvalItem item;
      if (!j.contains("candidate")) throw FormatError(where + ": field 'candidate': missing");
      if (!j.contains("references") || !j.at("references").is_array() ||
          j.at("references").empty()) {
        throw FormatError(where + ": field 'references': expected non-empty array");
      }
      item.candidate = split_words(j.at("candidate").get<std::string>());
      for (const auto& r : j.at("references")) item.references.push_back(split_words(r.get<std::string>()));
      corpus.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  if (corpus.empty()) throw FormatError(path.string() + ": no records");
  return corpus;
}

}  // namespace datn
