// Copyright 2026 The rtgae Authors. All Rights Reserved.
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

// Shared tokenizer for the tree and grammar text formats. Internal header.

#ifndef RTGAE_SRC_LEXER_HPP_
#define RTGAE_SRC_LEXER_HPP_

#include <string>
#include <string_view>

#include "rtgae/tree.hpp"

namespace rtgae::detail {

enum class TokenKind { kWord, kLParen, kRParen, kComma, kSemicolon, kArrow, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == ',' || c == ';' || c == '#' || c == ' ' ||
         c == '\t' || c == '\n' || c == '\r';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

  Token expect(TokenKind kind, const char* what) {
    if (current_.kind != kind) fail(std::string("expected ") + what);
    return next();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::string found = current_.kind == TokenKind::kEnd ? "end of input"
                                                         : "'" + current_.text + "'";
    throw SyntaxError(msg + ", found " + found, current_.line, current_.column);
  }

 private:
  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  bool at_arrow() const {
    return text_[pos_] == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>';
  }

  void advance() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        bump();
      } else {
        break;
      }
    }
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    auto single = [&](TokenKind k) {
      current_.kind = k;
      current_.text = std::string(1, c);
      bump();
    };
    switch (c) {
      case '(': single(TokenKind::kLParen); return;
      case ')': single(TokenKind::kRParen); return;
      case ',': single(TokenKind::kComma); return;
      case ';': single(TokenKind::kSemicolon); return;
      default: break;
    }
    if (at_arrow()) {
      current_.kind = TokenKind::kArrow;
      current_.text = "->";
      bump();
      bump();
      return;
    }
    current_.kind = TokenKind::kWord;
    std::size_t start = pos_;
    if (c == '{') {
      // set-valued nonterminal names such as {A,B} carry commas
      while (pos_ < text_.size() && text_[pos_] != '}' && text_[pos_] != '\n') bump();
      if (pos_ >= text_.size() || text_[pos_] != '}')
        throw SyntaxError("unterminated '{'", current_.line, current_.column);
      bump();
      while (pos_ < text_.size() && (text_[pos_] == '*' || text_[pos_] == '?')) bump();
    } else {
      while (pos_ < text_.size() && !is_delimiter(text_[pos_]) && !at_arrow()) bump();
    }
    current_.text = std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
  Token current_;
};

}  // namespace rtgae::detail

#endif  // RTGAE_SRC_LEXER_HPP_
