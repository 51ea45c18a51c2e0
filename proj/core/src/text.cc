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

#include "lmlab/text.h"

#include <algorithm>
#include <map>
#include <sstream>

namespace lmlab {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string PairKey(const std::string& a, const std::string& b) {
  std::string key = a;
  key.push_back('\0');
  key += b;
  return key;
}

std::vector<std::string_view> Words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::vector<std::string> Lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// Merges every occurrence of (left, right) in `symbols`, scanning left to right.
void ApplyMerge(std::vector<std::string>& symbols, const std::string& left,
                const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

std::vector<std::string> InitialSymbols(std::string_view word) {
  std::vector<std::string> symbols = SplitCodePoints(word);
  if (!symbols.empty()) symbols[0] = std::string(kWordMarker) + symbols[0];
  return symbols;
}

}  // namespace

std::vector<std::string> SplitCodePoints(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len;
    if (lead < 0x80) {
      len = 1;
    } else if ((lead >> 5) == 0x6) {
      len = 2;
    } else if ((lead >> 4) == 0xE) {
      len = 3;
    } else if ((lead >> 3) == 0x1E) {
      len = 4;
    } else {
      Fail(ErrorKind::kData, "invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > text.size()) Fail(ErrorKind::kData, "truncated UTF-8 sequence at end of text");
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) {
        Fail(ErrorKind::kData, "invalid UTF-8 continuation byte at offset " +
                                   std::to_string(i + k));
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string EscapeToken(std::string_view token) {
  std::string out;
  for (char c : token) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      case ' ':
        out += "\\s";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string UnescapeToken(std::string_view escaped) {
  std::string out;
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] != '\\') {
      out.push_back(escaped[i]);
      continue;
    }
    if (i + 1 >= escaped.size()) Fail(ErrorKind::kData, "dangling escape in token");
    switch (escaped[++i]) {
      case '\\':
        out.push_back('\\');
        break;
      case 'n':
        out.push_back('\n');
        break;
      case 't':
        out.push_back('\t');
        break;
      case 'r':
        out.push_back('\r');
        break;
      case 's':
        out.push_back(' ');
        break;
      default:
        Fail(ErrorKind::kData, "unknown escape in token: \\" + std::string(1, escaped[i]));
    }
  }
  return out;
}

std::string_view TokenizerModeName(TokenizerMode mode) {
  switch (mode) {
    case TokenizerMode::kWhitespace:
      return "whitespace";
    case TokenizerMode::kCharacter:
      return "character";
    case TokenizerMode::kSubword:
      return "subword";
  }
  return "unknown";
}

TokenizerMode ParseTokenizerMode(std::string_view name) {
  if (name == "whitespace") return TokenizerMode::kWhitespace;
  if (name == "character") return TokenizerMode::kCharacter;
  if (name == "subword") return TokenizerMode::kSubword;
  Fail(ErrorKind::kConfig, "unknown tokenizer mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Vocab

void Vocab::Insert(std::string token) {
  const auto id = static_cast<TokenId>(token_of_.size());
  if (!id_of_.emplace(token, id).second) {
    Fail(ErrorKind::kData, "vocabulary: duplicate token '" + EscapeToken(token) + "'");
  }
  token_of_.push_back(std::move(token));
}

Vocab Vocab::FromTokens(std::span<const std::string> tokens) {
  Vocab v;
  v.Insert("<bos>");
  v.Insert("<eos>");
  v.Insert("<unk>");
  for (const auto& t : tokens) v.Insert(t);
  return v;
}

Vocab Vocab::Build(std::span<const std::string> corpus, std::size_t max_size) {
  if (corpus.empty()) Fail(ErrorKind::kData, "build_vocab: empty corpus");
  if (max_size < kNumSpecial + 1) {
    Fail(ErrorKind::kConfig, "build_vocab: max_size must be at least 4");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& t : corpus) ++counts[t];
  for (const char* special : {"<bos>", "<eos>", "<unk>"}) counts.erase(special);
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort keeps ties in that order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - kNumSpecial);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return FromTokens(tokens);
}

Vocab Vocab::Parse(std::string_view text) {
  std::vector<std::string> lines = Lines(text);
  if (lines.size() < kNumSpecial + 1 || lines[0] != "<bos>" || lines[1] != "<eos>" ||
      lines[2] != "<unk>") {
    Fail(ErrorKind::kData, "vocab file must start with <bos>, <eos>, <unk> and hold >= 4 lines");
  }
  std::vector<std::string> tokens;
  for (std::size_t i = kNumSpecial; i < lines.size(); ++i) {
    tokens.push_back(UnescapeToken(lines[i]));
  }
  return FromTokens(tokens);
}

std::string Vocab::Serialize() const {
  std::string out;
  for (const auto& t : token_of_) {
    out += EscapeToken(t);
    out.push_back('\n');
  }
  return out;
}

std::optional<TokenId> Vocab::Find(std::string_view token) const {
  auto it = id_of_.find(std::string(token));
  if (it == id_of_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::Id(std::string_view token) const { return Find(token).value_or(kUnk); }

const std::string& Vocab::Token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= token_of_.size()) {
    Fail(ErrorKind::kContract, "vocabulary: id " + std::to_string(id) + " out of range");
  }
  return token_of_[static_cast<std::size_t>(id)];
}

// ---------------------------------------------------------------------------
// Tokenizer

Tokenizer::Tokenizer(TokenizerMode mode, std::vector<Merge> merges)
    : mode_(mode), merges_(std::move(merges)) {
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    rank_.emplace(PairKey(merges_[r].first, merges_[r].second), r);
  }
}

std::vector<std::string> Tokenizer::SplitWord(std::string_view word) const {
  std::vector<std::string> symbols = InitialSymbols(word);
  // Standard rank-ordered application: merge the lowest-ranked adjacent pair.
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find(PairKey(symbols[i], symbols[i + 1]));
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == merges_.size()) break;
    ApplyMerge(symbols, merges_[best_rank].first, merges_[best_rank].second);
  }
  return symbols;
}

std::vector<std::string> Tokenizer::Split(std::string_view text) const {
  std::vector<std::string> out;
  switch (mode_) {
    case TokenizerMode::kCharacter:
      return SplitCodePoints(text);
    case TokenizerMode::kSubword:
      for (std::string_view w : Words(text)) {
        auto pieces = SplitWord(w);
        out.insert(out.end(), std::make_move_iterator(pieces.begin()),
                   std::make_move_iterator(pieces.end()));
      }
      return out;
    case TokenizerMode::kWhitespace: {
      std::size_t i = 0;
      while (i < text.size()) {
        const bool space = IsSpace(text[i]);
        const std::size_t start = i;
        while (i < text.size() && IsSpace(text[i]) == space) ++i;
        std::string_view run = text.substr(start, i - start);
        if (space && run == " " && start > 0 && i < text.size()) continue;  // implied
        out.emplace_back(run);
      }
      return out;
    }
  }
  return out;
}

std::string Tokenizer::Join(std::span<const std::string> pieces) const {
  std::string out;
  switch (mode_) {
    case TokenizerMode::kCharacter:
      for (const auto& p : pieces) out += p;
      return out;
    case TokenizerMode::kSubword:
      for (const auto& p : pieces) {
        if (p.starts_with(kWordMarker)) {
          if (!out.empty()) out.push_back(' ');
          out += p.substr(kWordMarker.size());
        } else {
          out += p;
        }
      }
      return out;
    case TokenizerMode::kWhitespace: {
      bool prev_word = false;
      for (const auto& p : pieces) {
        const bool word = !p.empty() && !IsSpace(p[0]);
        if (word && prev_word) out.push_back(' ');
        out += p;
        prev_word = word;
      }
      return out;
    }
  }
  return out;
}

std::vector<TokenId> Tokenizer::Tokenize(std::string_view text, const Vocab& vocab) const {
  std::vector<TokenId> ids;
  for (const auto& piece : Split(text)) ids.push_back(vocab.Id(piece));
  return ids;
}

std::string Tokenizer::Detokenize(std::span<const TokenId> ids, const Vocab& vocab) const {
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (TokenId id : ids) pieces.push_back(vocab.Token(id));
  return Join(pieces);
}

std::vector<std::string> Tokenizer::PieceInventory(std::string_view corpus) const {
  std::vector<std::string> inventory;
  std::unordered_map<std::string, bool> seen;
  auto add = [&](const std::string& s) {
    if (seen.emplace(s, true).second) inventory.push_back(s);
  };
  if (mode_ == TokenizerMode::kSubword) {
    // Every code point in both word-initial and word-internal form, so any
    // word over the corpus alphabet tokenizes without UNK.
    for (std::string_view w : Words(corpus)) {
      for (const auto& s : InitialSymbols(w)) add(s);
    }
    for (std::string_view w : Words(corpus)) {
      for (const auto& c : SplitCodePoints(w)) {
        add(std::string(kWordMarker) + c);
        add(c);
      }
    }
    for (const auto& [l, r] : merges_) add(l + r);
  } else {
    for (const auto& s : Split(corpus)) add(s);
  }
  return inventory;
}

std::string Tokenizer::SerializeMerges() const {
  std::string out;
  for (const auto& [l, r] : merges_) {
    out += EscapeToken(l);
    out.push_back(' ');
    out += EscapeToken(r);
    out.push_back('\n');
  }
  return out;
}

std::vector<Tokenizer::Merge> Tokenizer::ParseMerges(std::string_view text) {
  std::vector<Merge> merges;
  std::size_t line_no = 0;
  for (const auto& line : Lines(text)) {
    ++line_no;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos) {
      Fail(ErrorKind::kData, "merges line " + std::to_string(line_no) +
                                 ": expected 'left right'");
    }
    merges.emplace_back(UnescapeToken(line.substr(0, sp)), UnescapeToken(line.substr(sp + 1)));
  }
  return merges;
}

Tokenizer LearnSubwordMerges(std::string_view corpus, std::size_t n_merges) {
  const auto words = Words(corpus);
  if (words.empty()) Fail(ErrorKind::kData, "learn_subword_merges: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (std::string_view w : words) ++freq[std::string(w)];
  std::vector<std::pair<std::vector<std::string>, std::size_t>> types;
  for (const auto& [w, n] : freq) types.emplace_back(InitialSymbols(w), n);

  std::vector<Tokenizer::Merge> merges;
  while (merges.size() < n_merges) {
    std::map<std::pair<std::string, std::string>, std::size_t> pairs;
    for (const auto& [symbols, n] : types) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pairs[{symbols[i], symbols[i + 1]}] += n;
      }
    }
    if (pairs.empty()) break;
    // First maximum in lexicographic order wins ties.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    for (auto& [symbols, n] : types) ApplyMerge(symbols, left, right);
    merges.emplace_back(left, right);
  }
  return Tokenizer::Subword(std::move(merges));
}

}  // namespace lmlab
