#include "editeval/text.hpp"

#include <cctype>

#include "editeval/error.hpp"

namespace editeval {
namespace {

bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool IsPunct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

TokenSequence Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (IsSpace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (IsPunct(c)) {
      // An apostrophe survives only inside a word ("it's", "rock'n'roll").
      bool intra_word = c == '\'' && !current.empty() && IsAlnum(current.back()) &&
                        i + 1 < text.size() && IsAlnum(text[i + 1]);
      if (!intra_word) continue;
    }
    current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return TokenSequence(std::move(tokens));
}

TokenSequence TokenSequence::FromTokens(std::vector<std::string> tokens) {
  for (const auto& t : tokens) {
    TokenSequence check = Tokenize(t);
    if (t.empty() || check.size() != 1 || check[0] != t) {
      throw Error(ErrorCode::kSchema, "not a canonical token: '" + t + "'");
    }
  }
  return TokenSequence(std::move(tokens));
}

std::string TokenSequence::Join() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens_[i];
  }
  return out;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace editeval
