// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace datn {

inline constexpr int kStartId = 0;
inline constexpr int kEndId = 1;
inline constexpr int kUnknownId = 2;
inline constexpr int kPadId = 3;

/// Words never promoted to concepts.
const std::vector<std::string>& stopwords();
bool is_stopword(const std::string& word);
bool is_special_token(const std::string& word);

std::vector<std::string> split_words(const std::string& text);

/// Token <-> id bijection with the concept subset and answer classes.
///
/// Ids 0..3 are reserved for <start>, <end>, <unk>, <pad>.
class Vocabulary {
 public:
  Vocabulary();
  Vocabulary(std::vector<std::string> tokens, std::vector<std::string> concepts,
             std::vector<std::string> answers);

  std::size_t size() const { return tokens_.size(); }
  std::size_t concept_count() const { return concept_ids_.size(); }
  std::size_t answer_count() const { return answers_.size(); }

  const std::string& token(int id) const;
  int id(const std::string& token) const;  // throws on unknown
  int id_or_unknown(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Token ids of the concepts; concept j is tokens()[concept_ids()[j]].
  const std::vector<int>& concept_ids() const { return concept_ids_; }
  std::vector<std::string> concept_words() const;
  /// Concept index of a token id, or -1.
  int concept_index(int token_id) const;

  const std::vector<std::string>& answers() const { return answers_; }
  int answer_id(const std::string& word) const;  // throws on unknown

  std::vector<int> encode(const std::string& text) const;  // throws on unknown
  std::string decode(const std::vector<int>& ids) const;

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::vector<int> concept_ids_;
  std::vector<int> concept_of_token_;
  std::vector<std::string> answers_;
};

/// Builds the token set from captions and questions (words with corpus
/// frequency < min_count dropped) and picks the c most frequent non-stopword
/// caption words as concepts, frequency ties broken lexicographically.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& captions,
                       const std::vector<std::vector<std::string>>& questions,
                       std::size_t min_count, std::size_t concepts,
                       std::vector<std::string> answers);

}  // namespace datn
