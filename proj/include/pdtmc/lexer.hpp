#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "pdtmc/errors.hpp"

namespace pdtmc {

enum class TokenKind { Identifier, Number, String, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  SourceSpan span;

  bool is(std::string_view punct) const { return kind == TokenKind::Punct && text == punct; }
  bool is_word(std::string_view word) const { return kind == TokenKind::Identifier && text == word; }
};

/// Tokenizer shared by the expression, model and property grammars.
/// Skips whitespace and `//` line comments.
inline std::vector<Token> tokenize(std::string_view src) {
  static constexpr std::string_view two_char[] = {"->", "..", "<=", ">=", "!="};
  static constexpr std::string_view one_char = "=<>+-*/^()[]{};:,&|!'?";

  std::vector<Token> out;
  std::size_t i = 0, line = 1, line_start = 0;
  auto span_at = [&](std::size_t start, std::size_t end) {
    return SourceSpan{start, end, line, start - line_start + 1};
  };

  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++i;
      ++line;
      line_start = i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      out.push_back({TokenKind::Identifier, std::string(src.substr(start, i - start)), span_at(start, i)});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      out.push_back({TokenKind::Number, std::string(src.substr(start, i - start)), span_at(start, i)});
      continue;
    }
    if (c == '"') {
      ++i;
      while (i < src.size() && src[i] != '"' && src[i] != '\n') ++i;
      if (i >= src.size() || src[i] != '"') throw SyntaxError(span_at(start, i), "unterminated string literal");
      ++i;
      out.push_back({TokenKind::String, std::string(src.substr(start + 1, i - start - 2)), span_at(start, i)});
      continue;
    }
    bool matched = false;
    for (auto p : two_char) {
      if (src.substr(i, 2) == p) {
        out.push_back({TokenKind::Punct, std::string(p), span_at(start, i + 2)});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (one_char.find(c) != std::string_view::npos) {
      out.push_back({TokenKind::Punct, std::string(1, c), span_at(start, i + 1)});
      ++i;
      continue;
    }
    throw SyntaxError(span_at(start, start + 1), std::string("unexpected character '") + c + "'");
  }
  out.push_back({TokenKind::End, "", span_at(src.size(), src.size())});
  return out;
}

/// Cursor over a token vector with the usual expect/accept helpers.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const {
    const auto idx = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[idx];
  }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokenKind::End; }

  bool accept(std::string_view punct) {
    if (peek().is(punct)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_word(std::string_view word) {
    if (peek().is_word(word)) {
      next();
      return true;
    }
    return false;
  }
  const Token& expect(std::string_view punct) {
    if (!peek().is(punct)) fail("expected '" + std::string(punct) + "'");
    return next();
  }
  const Token& expect_word(std::string_view word) {
    if (!peek().is_word(word)) fail("expected '" + std::string(word) + "'");
    return next();
  }
  const Token& expect_kind(TokenKind kind, std::string_view what) {
    if (peek().kind != kind) fail("expected " + std::string(what));
    return next();
  }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    const std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.span, message + ", found " + found);
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace pdtmc
