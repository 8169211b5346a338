#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace editeval {

// Lowercase token list produced by the canonical tokenizer. Every n-gram
// metric consumes this type so that candidate and references always share
// one normalization.
class TokenSequence {
 public:
  TokenSequence() = default;

  // Wraps pre-split tokens. Throws Error(kSchema) on an empty token or one
  // that the tokenizer would not reproduce unchanged.
  static TokenSequence FromTokens(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  std::string Join() const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  friend TokenSequence Tokenize(std::string_view text);
  explicit TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}

  std::vector<std::string> tokens_;
};

// Lowercases ASCII, drops punctuation except apostrophes between two
// alphanumerics, and splits on whitespace.
TokenSequence Tokenize(std::string_view text);

std::string PorterStem(std::string_view word);

std::string Trim(std::string_view s);

}  // namespace editeval
