// SPDX-License-Identifier: Apache-2.0
#include "datn/vocab.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace datn {

namespace {
const std::vector<std::string> kSpecials = {"<start>", "<end>", "<unk>", "<pad>"};
}

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words = {"a", "is", "the", "on", "of", "in"};
  return words;
}

bool is_stopword(const std::string& word) {
  const auto& s = stopwords();
  return std::find(s.begin(), s.end(), word) != s.end();
}

bool is_special_token(const std::string& word) {
  return std::find(kSpecials.begin(), kSpecials.end(), word) != kSpecials.end();
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Vocabulary::Vocabulary() : Vocabulary({}, {}, {}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::string> concepts,
                       std::vector<std::string> answers)
    : answers_(std::move(answers)) {
  tokens_ = kSpecials;
  for (auto& t : tokens) {
    if (is_special_token(t)) continue;
    tokens_.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty() || tokens_[i][0] == '#') {
      throw std::invalid_argument("vocabulary: invalid token '" + tokens_[i] + "'");
    }
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
  concept_of_token_.assign(tokens_.size(), -1);
  for (const auto& c : concepts) {
    auto it = index_.find(c);
    if (it == index_.end()) {
      throw std::invalid_argument("vocabulary: concept '" + c + "' is not a token");
    }
    if (concept_of_token_[it->second] >= 0) {
      throw std::invalid_argument("vocabulary: duplicate concept '" + c + "'");
    }
    concept_of_token_[it->second] = static_cast<int>(concept_ids_.size());
    concept_ids_.push_back(it->second);
  }
  for (std::size_t i = 0; i < answers_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (answers_[i] == answers_[j])
        throw std::invalid_argument("vocabulary: duplicate answer '" + answers_[i] + "'");
    }
  }
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary: token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw std::invalid_argument("unknown token '" + token + "'");
  return it->second;
}

int Vocabulary::id_or_unknown(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknownId : it->second;
}

std::vector<std::string> Vocabulary::concept_words() const {
  std::vector<std::string> out;
  for (int id : concept_ids_) out.push_back(tokens_[static_cast<std::size_t>(id)]);
  return out;
}

int Vocabulary::concept_index(int token_id) const {
  if (token_id < 0 || static_cast<std::size_t>(token_id) >= concept_of_token_.size()) return -1;
  return concept_of_token_[static_cast<std::size_t>(token_id)];
}

int Vocabulary::answer_id(const std::string& word) const {
  for (std::size_t i = 0; i < answers_.size(); ++i) {
    if (answers_[i] == word) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown answer '" + word + "'");
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  return tokens_ == other.tokens_ && concept_ids_ == other.concept_ids_ &&
         answers_ == other.answers_;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& captions,
                       const std::vector<std::vector<std::string>>& questions,
                       std::size_t min_count, std::size_t concepts,
                       std::vector<std::string> answers) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");

  std::map<std::string, std::size_t> caption_freq;
  std::map<std::string, std::size_t> freq;
  for (const auto& c : captions)
    for (const auto& w : c) {
      if (is_special_token(w)) continue;
      ++caption_freq[w];
      ++freq[w];
    }
  for (const auto& q : questions)
    for (const auto& w : q) {
      if (!is_special_token(w)) ++freq[w];
    }

  std::vector<std::string> tokens;
  for (const auto& [w, n] : freq) {
    if (n >= min_count) tokens.push_back(w);
  }

  std::vector<std::pair<std::string, std::size_t>> eligible;
  for (const auto& [w, n] : caption_freq) {
    if (n >= min_count && !is_stopword(w)) eligible.emplace_back(w, n);
  }
  if (concepts > eligible.size()) {
    throw std::invalid_argument("build_vocab: requested " + std::to_string(concepts) +
                                " concepts but only " + std::to_string(eligible.size()) +
                                " eligible caption words");
  }
  std::stable_sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> concept_words;
  for (std::size_t i = 0; i < concepts; ++i) concept_words.push_back(eligible[i].first);

  return Vocabulary(std::move(tokens), std::move(concept_words), std::move(answers));
}

}  // namespace datn
