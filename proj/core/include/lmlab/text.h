// Copyright 2026 The lmlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMLAB_TEXT_H_
#define LMLAB_TEXT_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmlab/tensor.h"

namespace lmlab {

// Bidirectional token <-> id map with three reserved ids.
class Vocab {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr std::size_t kNumSpecial = 3;

  // The max_size - 3 most frequent tokens get ids in order of decreasing
  // frequency, ties broken lexicographically. Requires max_size >= 4.
  static Vocab Build(std::span<const std::string> corpus, std::size_t max_size);
  // Non-special tokens in id order, starting at id 3.
  static Vocab FromTokens(std::span<const std::string> tokens);
  // Line-oriented form: one escaped token per line, id = line number.
  static Vocab Parse(std::string_view text);
  std::string Serialize() const;

  TokenId Id(std::string_view token) const;  // kUnk when absent
  std::optional<TokenId> Find(std::string_view token) const;
  const std::string& Token(TokenId id) const;
  std::size_t size() const { return token_of_.size(); }
  const std::vector<std::string>& tokens() const { return token_of_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.token_of_ == b.token_of_; }

 private:
  void Insert(std::string token);

  std::vector<std::string> token_of_;
  std::unordered_map<std::string, TokenId> id_of_;
};

enum class TokenizerMode { kWhitespace, kCharacter, kSubword };

// Word boundary marker used in subword mode (U+2581). Input text containing it
// does not round-trip.
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81";

class Tokenizer {
 public:
  using Merge = std::pair<std::string, std::string>;

  static Tokenizer Whitespace() { return Tokenizer(TokenizerMode::kWhitespace, {}); }
  static Tokenizer Character() { return Tokenizer(TokenizerMode::kCharacter, {}); }
  static Tokenizer Subword(std::vector<Merge> merges) {
    return Tokenizer(TokenizerMode::kSubword, std::move(merges));
  }

  // Text -> token strings, no vocabulary lookup.
  //  whitespace: words plus explicit whitespace runs; a single space between
  //              two words is implied and not emitted.
  //  character:  one token per Unicode scalar value.
  //  subword:    each word starts with kWordMarker and is merged by rank.
  //              Whitespace is normalised to single spaces.
  std::vector<std::string> Split(std::string_view text) const;
  std::string Join(std::span<const std::string> pieces) const;

  std::vector<TokenId> Tokenize(std::string_view text, const Vocab& vocab) const;
  std::string Detokenize(std::span<const TokenId> ids, const Vocab& vocab) const;

  // Every symbol the tokenizer can emit on `corpus`: the initial symbols plus
  // the result of each merge.
  std::vector<std::string> PieceInventory(std::string_view corpus) const;

  TokenizerMode mode() const { return mode_; }
  const std::vector<Merge>& merges() const { return merges_; }

  // One merge per line, "left right" escaped; rank = line number.
  std::string SerializeMerges() const;
  static std::vector<Merge> ParseMerges(std::string_view text);

 private:
  Tokenizer(TokenizerMode mode, std::vector<Merge> merges);
  std::vector<std::string> SplitWord(std::string_view word) const;

  TokenizerMode mode_;
  std::vector<Merge> merges_;
  std::unordered_map<std::string, std::size_t> rank_;  // "left\0right" -> rank
};

// Greedy pair merging: repeatedly merges the most frequent adjacent symbol
// pair (ties lexicographic) up to n_merges times or until no pair remains.
Tokenizer LearnSubwordMerges(std::string_view corpus, std::size_t n_merges);

// Splits UTF-8 into one string per scalar value; invalid input is a data error.
std::vector<std::string> SplitCodePoints(std::string_view text);

std::string EscapeToken(std::string_view token);
std::string UnescapeToken(std::string_view escaped);

std::string_view TokenizerModeName(TokenizerMode mode);
TokenizerMode ParseTokenizerMode(std::string_view name);

}  // namespace lmlab

#endif  // LMLAB_TEXT_H_
