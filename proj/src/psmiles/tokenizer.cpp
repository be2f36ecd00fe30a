// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp::psmiles {
namespace {

bool in_alphabet(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  switch (c) {
  case '(': case ')': case '[': case ']': case '=': case '#': case '-':
  case '+': case '/': case '\\': case '.': case ':': case '%': case '*':
  case '@':
    return true;
  default:
    return false;
  }
}

bool is_two_letter_element(char a, char b) {
  return (a == 'C' && b == 'l') || (a == 'B' && b == 'r') ||
         (a == 'S' && b == 'i') || (a == 'S' && b == 'e');
}

}  // namespace

bool is_special_token(std::string_view token) noexcept {
  return token == kPadToken || token == kClsToken || token == kSepToken ||
         token == kMaskToken || token == kUnkToken;
}

std::vector<std::string> lex(std::string_view text) {
  if (text.empty()) throw Error(Errc::kEmptyInput, "empty P-SMILES");
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (!in_alphabet(c))
      throw Error(Errc::kInvalidCharacter,
                  "character '" + std::string(1, c) + "' at " + std::to_string(i) +
                      " is outside the SMILES alphabet");
    if (c == '[') {
      const auto close = text.find(']', i);
      if (close == std::string_view::npos)
        throw Error(Errc::kUnterminatedBracketAtom,
                    "missing ']' for '[' at " + std::to_string(i));
      for (std::size_t k = i + 1; k < close; ++k)
        if (!in_alphabet(text[k]) || text[k] == '[')
          throw Error(Errc::kInvalidCharacter, "bad character inside bracket atom");
      out.emplace_back(text.substr(i, close - i + 1));
      i = close + 1;
    } else if (c == '%' && i + 2 < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
               std::isdigit(static_cast<unsigned char>(text[i + 2]))) {
      out.emplace_back(text.substr(i, 3));
      i += 3;
    } else if (i + 1 < text.size() && is_two_letter_element(c, text[i + 1])) {
      out.emplace_back(text.substr(i, 2));
      i += 2;
    } else {
      out.emplace_back(1, c);
      ++i;
    }
  }
  return out;
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  auto body = lex(text);
  seq.tokens.reserve(body.size() + 2);
  seq.tokens.emplace_back(kClsToken);
  for (auto &t : body) seq.tokens.push_back(std::move(t));
  seq.tokens.emplace_back(kSepToken);
  return seq;
}

std::string detokenize(const TokenSequence &sequence) {
  std::string out;
  for (const auto &t : sequence.tokens)
    if (!is_special_token(t)) out += t;
  if (out.empty()) throw Error(Errc::kEmptyBody, "token sequence has no body tokens");
  return out;
}

Vocabulary::Vocabulary()
    : tokens_{std::string(kPadToken), std::string(kClsToken),
              std::string(kSepToken), std::string(kMaskToken),
              std::string(kUnkToken)} {
  sorted_ids_.resize(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) sorted_ids_[i] = static_cast<int>(i);
  std::sort(sorted_ids_.begin(), sorted_ids_.end(),
            [this](int a, int b) { return tokens_[a] < tokens_[b]; });
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus) {
  std::set<std::string> unique;
  for (const auto &s : corpus)
    for (auto &t : lex(s)) unique.insert(std::move(t));
  std::vector<std::string> tokens = Vocabulary().tokens_;
  for (const auto &t : unique)
    if (!is_special_token(t)) tokens.push_back(t);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  if (tokens.size() < static_cast<std::size_t>(kReservedCount) ||
      !std::equal(v.tokens_.begin(), v.tokens_.end(), tokens.begin()))
    throw Error(Errc::kVersionMismatch, "vocabulary does not start with the reserved tokens");
  std::set<std::string> seen(tokens.begin(), tokens.end());
  if (seen.size() != tokens.size())
    throw Error(Errc::kCorruptPayload, "vocabulary has duplicate tokens");
  v.tokens_ = std::move(tokens);
  v.sorted_ids_.resize(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.sorted_ids_[i] = static_cast<int>(i);
  std::sort(v.sorted_ids_.begin(), v.sorted_ids_.end(),
            [&v](int a, int b) { return v.tokens_[a] < v.tokens_[b]; });
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = std::lower_bound(sorted_ids_.begin(), sorted_ids_.end(), token,
                             [this](int id, std::string_view t) { return tokens_[id] < t; });
  if (it != sorted_ids_.end() && tokens_[*it] == token) return *it;
  return kUnkId;
}

const std::string &Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw Error(Errc::kUnknownId, "token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

std::vector<int> encode_ids(const TokenSequence &sequence, const Vocabulary &vocab) {
  std::vector<int> ids;
  ids.reserve(sequence.tokens.size());
  for (const auto &t : sequence.tokens) ids.push_back(vocab.id(t));
  return ids;
}

}  // namespace mmp::psmiles
