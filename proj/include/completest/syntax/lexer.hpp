#pragma once

// Lexical analysis for Python source. Tokens carry byte spans into the
// original text; everything between two consecutive tokens is trivia
// (spaces, comments, blank lines, line continuations).

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace completest::syntax {

enum class TokenKind : std::uint8_t {
  Name,
  Number,
  String,
  Op,
  Newline,
  Indent,
  Dedent,
  EndMarker,
};

struct Token {
  TokenKind kind;
  std::uint32_t begin;
  std::uint32_t end;
  std::uint32_t line;    // 1-based
  std::uint32_t column;  // 0-based, in bytes

  [[nodiscard]] std::uint32_t size() const { return end - begin; }
  [[nodiscard]] std::string_view text(std::string_view source) const {
    return source.substr(begin, end - begin);
  }
};

class LexError : public std::runtime_error {
 public:
  LexError(const std::string& what, std::size_t offset, std::uint32_t line,
           std::uint32_t column)
      : std::runtime_error(what + " at byte " + std::to_string(offset) + " (line " +
                           std::to_string(line) + ", column " + std::to_string(column) + ")"),
        offset_(offset),
        line_(line),
        column_(column) {}

  [[nodiscard]] std::size_t offset() const { return offset_; }
  [[nodiscard]] std::uint32_t line() const { return line_; }
  [[nodiscard]] std::uint32_t column() const { return column_; }

 private:
  std::size_t offset_;
  std::uint32_t line_;
  std::uint32_t column_;
};

inline constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

[[nodiscard]] inline bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

namespace detail {

[[nodiscard]] inline bool is_name_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}
[[nodiscard]] inline bool is_name_char(unsigned char c) {
  return is_name_start(c) || (c >= '0' && c <= '9');
}
[[nodiscard]] inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
[[nodiscard]] inline bool is_hex(unsigned char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

// Returns the byte length of a valid UTF-8 sequence starting at `pos`, or 0.
[[nodiscard]] inline std::size_t utf8_sequence_length(std::string_view s, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t len = 0;
  std::uint32_t min_value = 0;
  std::uint32_t value = 0;
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) {
    len = 2;
    value = lead & 0x1F;
    min_value = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    value = lead & 0x0F;
    min_value = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    value = lead & 0x07;
    min_value = 0x10000;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const auto c = static_cast<unsigned char>(s[pos + i]);
    if ((c & 0xC0) != 0x80) return 0;
    value = (value << 6) | (c & 0x3F);
  }
  if (value < min_value || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return 0;
  return len;
}

inline constexpr std::array<std::string_view, 24> kMultiCharOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};

inline constexpr std::string_view kSingleCharOps = "+-*/%@&|^~<>()[]{},:;.=";

class Lexer {
 public:
  Lexer(std::string_view source, bool expression_mode)
      : src_(source), expression_mode_(expression_mode) {
    if (expression_mode_) depth_ = 1;
  }

  std::vector<Token> run() {
    validate_utf8();
    indents_.push_back(0);
    at_line_start_ = !expression_mode_;
    while (pos_ < src_.size()) {
      if (at_line_start_) {
        if (handle_line_start()) continue;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        advance(1);
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance(1);
      } else if (c == '\\') {
        const std::size_t nl = newline_length(pos_ + 1);
        if (nl == 0) fail("unexpected character after line continuation");
        advance(1);
        advance_newline(nl);
      } else if (newline_length(pos_) != 0) {
        const std::size_t nl = newline_length(pos_);
        if (depth_ > 0 || !has_logical_content_) {
          advance_newline(nl);
        } else {
          emit(TokenKind::Newline, pos_, pos_ + nl);
          advance_newline(nl);
          has_logical_content_ = false;
        }
        if (depth_ == 0) at_line_start_ = true;
      } else {
        lex_significant();
      }
    }
    if (has_logical_content_) emit(TokenKind::Newline, pos_, pos_);
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::Dedent, pos_, pos_);
    }
    emit(TokenKind::EndMarker, pos_, pos_);
    return std::move(tokens_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw LexError(what, pos_, line_, static_cast<std::uint32_t>(pos_ - line_begin_));
  }

  void validate_utf8() {
    std::size_t i = 0;
    while (i < src_.size()) {
      const std::size_t len = utf8_sequence_length(src_, i);
      if (len == 0) {
        pos_ = i;
        fail("invalid UTF-8");
      }
      i += len;
    }
  }

  [[nodiscard]] std::size_t newline_length(std::size_t at) const {
    if (at >= src_.size()) return 0;
    if (src_[at] == '\n') return 1;
    if (src_[at] == '\r') return (at + 1 < src_.size() && src_[at + 1] == '\n') ? 2 : 1;
    return 0;
  }

  void advance(std::size_t n) { pos_ += n; }
  void advance_newline(std::size_t n) {
    pos_ += n;
    ++line_;
    line_begin_ = pos_;
  }

  void emit(TokenKind kind, std::size_t begin, std::size_t end) {
    emit(kind, begin, end, line_,
         static_cast<std::uint32_t>(begin >= line_begin_ ? begin - line_begin_ : 0));
  }

  void emit(TokenKind kind, std::size_t begin, std::size_t end, std::uint32_t line,
            std::uint32_t column) {
    tokens_.push_back(Token{kind, static_cast<std::uint32_t>(begin),
                            static_cast<std::uint32_t>(end), line, column});
    if (kind != TokenKind::Newline && kind != TokenKind::Indent && kind != TokenKind::Dedent &&
        kind != TokenKind::EndMarker) {
      has_logical_content_ = true;
    }
  }

  // Measures indentation of a new logical line. Returns true when the line
  // was blank or comment-only and has been consumed entirely.
  bool handle_line_start() {
    std::size_t col = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      if (src_[p] == ' ') ++col;
      else if (src_[p] == '\t') col = (col / 8 + 1) * 8;
      else col = 0;
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      at_line_start_ = false;
      return true;
    }
    if (src_[p] == '#' || newline_length(p) != 0) {
      pos_ = p;
      while (pos_ < src_.size() && newline_length(pos_) == 0) advance(1);
      if (pos_ < src_.size()) advance_newline(newline_length(pos_));
      return true;
    }
    at_line_start_ = false;
    if (col > indents_.back()) {
      indents_.push_back(col);
      emit(TokenKind::Indent, pos_, p);
      has_logical_content_ = false;
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::Dedent, p, p);
      }
      if (col != indents_.back()) {
        pos_ = p;
        fail("unindent does not match any outer indentation level");
      }
    }
    pos_ = p;
    return false;
  }

  void lex_significant() {
    const auto c = static_cast<unsigned char>(src_[pos_]);
    const std::size_t start = pos_;
    const std::uint32_t start_line = line_;
    const auto start_column = static_cast<std::uint32_t>(pos_ - line_begin_);
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() &&
                        is_digit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number();
      emit(TokenKind::Number, start, pos_);
      return;
    }
    if (is_name_start(c)) {
      std::size_t p = pos_;
      while (p < src_.size() && is_name_char(static_cast<unsigned char>(src_[p]))) ++p;
      const std::size_t prefix_len = p - pos_;
      if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'') && prefix_len <= 2 &&
          is_string_prefix(src_.substr(pos_, prefix_len))) {
        pos_ = p;
        lex_string_body();
        emit(TokenKind::String, start, pos_, start_line, start_column);
        return;
      }
      pos_ = p;
      emit(TokenKind::Name, start, pos_);
      return;
    }
    if (c == '"' || c == '\'') {
      lex_string_body();
      emit(TokenKind::String, start, pos_, start_line, start_column);
      return;
    }
    for (std::string_view op : kMultiCharOps) {
      if (src_.substr(pos_, op.size()) == op) {
        advance(op.size());
        emit(TokenKind::Op, start, pos_);
        return;
      }
    }
    if (kSingleCharOps.find(static_cast<char>(c)) != std::string_view::npos) {
      if (c == '(' || c == '[' || c == '{') {
        ++depth_;
      } else if (c == ')' || c == ']' || c == '}') {
        if (depth_ == 0 || (expression_mode_ && depth_ == 1)) fail("unmatched closing bracket");
        --depth_;
      }
      advance(1);
      emit(TokenKind::Op, start, pos_);
      return;
    }
    fail(std::string("unexpected character '") + static_cast<char>(c) + "'");
  }

  static bool is_string_prefix(std::string_view prefix) {
    std::string lower;
    for (char ch : prefix) lower.push_back(static_cast<char>(ch | 0x20));
    static constexpr std::array<std::string_view, 8> kPrefixes = {"r",  "u",  "b",  "f",
                                                                  "br", "rb", "fr", "rf"};
    return std::find(kPrefixes.begin(), kPrefixes.end(), lower) != kPrefixes.end();
  }

  // Backslash always protects the following character, raw or not; only the
  // value differs, which the lexer does not compute.
  void lex_string_body() {
    const char quote = src_[pos_];
    const bool triple = src_.substr(pos_, 3) == std::string(3, quote);
    const std::size_t open_pos = pos_;
    const std::uint32_t open_line = line_;
    const std::size_t open_line_begin = line_begin_;
    advance(triple ? 3 : 1);
    while (true) {
      if (pos_ >= src_.size()) {
        pos_ = open_pos;
        line_ = open_line;
        line_begin_ = open_line_begin;
        fail("unterminated string literal");
      }
      const char ch = src_[pos_];
      if (ch == '\\') {
        const std::size_t nl = newline_length(pos_ + 1);
        if (nl != 0) {
          advance(1);
          advance_newline(nl);
        } else {
          advance(pos_ + 1 < src_.size() ? 2 : 1);
        }
        continue;
      }
      if (newline_length(pos_) != 0) {
        if (!triple) {
          pos_ = open_pos;
          line_ = open_line;
          line_begin_ = open_line_begin;
          fail("unterminated string literal");
        }
        advance_newline(newline_length(pos_));
        continue;
      }
      if (ch == quote) {
        if (!triple) {
          advance(1);
          return;
        }
        if (src_.substr(pos_, 3) == std::string(3, quote)) {
          advance(3);
          return;
        }
      }
      advance(1);
    }
  }

  void lex_number() {
    auto digits = [this](auto pred) {
      while (pos_ < src_.size() &&
             (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        advance(1);
      }
    };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size()) {
      const char base = static_cast<char>(src_[pos_ + 1] | 0x20);
      if (base == 'x' || base == 'o' || base == 'b') {
        advance(2);
        const std::size_t before = pos_;
        if (base == 'x') digits(is_hex);
        else if (base == 'o') digits([](unsigned char d) { return d >= '0' && d <= '7'; });
        else digits([](unsigned char d) { return d == '0' || d == '1'; });
        if (pos_ == before) fail("invalid numeric literal");
        return;
      }
    }
    digits(is_digit);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance(1);
      digits(is_digit);
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        digits(is_digit);
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) advance(1);
    if (pos_ < src_.size() && is_name_char(static_cast<unsigned char>(src_[pos_]))) {
      fail("invalid numeric literal");
    }
  }

  std::string_view src_;
  bool expression_mode_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  std::size_t line_begin_ = 0;
  int depth_ = 0;
  bool at_line_start_ = true;
  bool has_logical_content_ = false;
  std::vector<std::size_t> indents_;
  std::vector<Token> tokens_;
};

}  // namespace detail

/// Tokenizes a complete Python module. Throws LexError on untokenizable input.
[[nodiscard]] inline std::vector<Token> tokenize(std::string_view source) {
  return detail::Lexer(source, false).run();
}

/// Tokenizes a bare expression as if it were enclosed in brackets, so line
/// breaks are insignificant. Used for f-string replacement fields.
[[nodiscard]] inline std::vector<Token> tokenize_expression(std::string_view source) {
  return detail::Lexer(source, true).run();
}

/// Number of lexical tokens in `source`: every token that consumes at least
/// one byte. Comments, blank lines, dedents and the end marker do not count.
[[nodiscard]] inline std::size_t count_tokens(std::string_view source) {
  const auto tokens = tokenize(source);
  return static_cast<std::size_t>(std::count_if(
      tokens.begin(), tokens.end(), [](const Token& t) { return t.size() > 0; }));
}

}  // namespace completest::syntax
