#pragma once

#include <array>
#include <cctype>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "re3/common.hpp"

namespace re3 {

/// An R source file split into lines. CR characters are stripped before
/// any processing, so CRLF and LF input lex identically.
struct SourceFile {
  std::string path;
  std::string text;               // CR-normalized
  std::vector<std::string> lines; // split on LF, no trailing empty line

  static SourceFile from_text(std::string path, std::string_view raw) {
    SourceFile src;
    src.path = std::move(path);
    src.text.reserve(raw.size());
    for (char c : raw)
      if (c != '\r')
        src.text += c;
    src.lines = split_lines(src.text);
    return src;
  }

  static SourceFile load(const std::filesystem::path &p) {
    return from_text(p.string(), read_file(p));
  }

  std::size_t line_count() const { return lines.size(); }
};

enum class TokenKind {
  Comment,
  String,
  Number,
  Keyword,
  Identifier,
  AssignOp,
  ArithmeticOp,
  ComparisonOp,
  Comma,
  OpenParen,
  CloseParen,
  OpenBracket,
  CloseBracket,
  OpenBrace,
  CloseBrace,
  Period,
  OtherOp,
  Whitespace,
};

/// One lexeme. Tokens never span lines: the lexer is line-oriented (a
/// regex-grade scanner, not an R grammar), so comment/string state and the
/// bracket depth counters reset at every newline. Concatenating the token
/// texts of a line reproduces that line byte for byte.
struct Token {
  TokenKind kind = TokenKind::OtherOp;
  std::string text;
  int line = 0; // 0-based line index
  int col = 0;  // 0-based byte column
  /// Nesting depth of () at the token. Open/close tokens carry the depth of
  /// the enclosing context; tokens between a pair carry that depth + 1.
  int depth_paren = 0;
  /// Same for [].
  int depth_bracket = 0;
};

struct LexWarning {
  std::string message;
  int line = 0;
  int col = 0;
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<LexWarning> warnings;
};

inline std::string_view token_kind_name(TokenKind k) {
  switch (k) {
  case TokenKind::Comment: return "Comment";
  case TokenKind::String: return "String";
  case TokenKind::Number: return "Number";
  case TokenKind::Keyword: return "Keyword";
  case TokenKind::Identifier: return "Identifier";
  case TokenKind::AssignOp: return "AssignOp";
  case TokenKind::ArithmeticOp: return "ArithmeticOp";
  case TokenKind::ComparisonOp: return "ComparisonOp";
  case TokenKind::Comma: return "Comma";
  case TokenKind::OpenParen: return "OpenParen";
  case TokenKind::CloseParen: return "CloseParen";
  case TokenKind::OpenBracket: return "OpenBracket";
  case TokenKind::CloseBracket: return "CloseBracket";
  case TokenKind::OpenBrace: return "OpenBrace";
  case TokenKind::CloseBrace: return "CloseBrace";
  case TokenKind::Period: return "Period";
  case TokenKind::OtherOp: return "OtherOp";
  case TokenKind::Whitespace: return "Whitespace";
  }
  return "OtherOp";
}

/// The R reserved words recognized as Keyword tokens.
inline const std::unordered_set<std::string_view> &r_keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "if",   "else",  "repeat", "while", "function",
      "for",  "next",  "break",  "TRUE",  "FALSE",
      "NULL", "Inf",   "NaN",    "NA",    "NA_integer_",
      "NA_real_",      "NA_complex_",     "NA_character_"};
  return kw;
}

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
// Bytes >= 0x80 are treated as identifier characters so UTF-8 names stay
// one token.
inline bool is_high(char c) { return static_cast<unsigned char>(c) >= 0x80; }
inline bool is_ident_start(char c) { return is_alpha(c) || is_high(c); }
inline bool is_ident_continue(char c) {
  return is_alpha(c) || is_digit(c) || c == '.' || c == '_' || is_high(c);
}
inline bool is_hex_digit(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

/// True if a String token's text is closed by a matching unescaped quote.
inline bool string_token_closed(std::string_view text) {
  if (text.size() < 2 || text.front() != text.back())
    return false;
  // the closing quote must not be escaped by an odd backslash run
  std::size_t backslashes = 0;
  for (std::size_t i = text.size() - 1; i-- > 1 && text[i] == '\\';)
    ++backslashes;
  return backslashes % 2 == 0;
}

class LineScanner {
public:
  LineScanner(std::string_view line, int line_idx, LexResult &out)
      : s_(line), line_(line_idx), out_(out) {}

  void run() {
    while (pos_ < s_.size())
      scan_one();
  }

private:
  std::string_view s_;
  int line_;
  LexResult &out_;
  std::size_t pos_ = 0;
  int depth_paren_ = 0;
  int depth_bracket_ = 0;

  char cur() const { return s_[pos_]; }
  char peek(std::size_t n = 1) const {
    return pos_ + n < s_.size() ? s_[pos_ + n] : '\0';
  }
  bool match(std::string_view lit) const {
    return s_.substr(pos_, lit.size()) == lit;
  }

  void emit(TokenKind kind, std::size_t len) {
    Token t;
    t.kind = kind;
    t.text = std::string(s_.substr(pos_, len));
    t.line = line_;
    t.col = static_cast<int>(pos_);
    t.depth_paren = depth_paren_;
    t.depth_bracket = depth_bracket_;
    out_.tokens.push_back(std::move(t));
    pos_ += len;
  }

  void warn(std::string msg) {
    out_.warnings.push_back({std::move(msg), line_, static_cast<int>(pos_)});
  }

  void scan_one() {
    char c = cur();
    if (is_space_or_tab(c)) {
      std::size_t n = 1;
      while (pos_ + n < s_.size() && is_space_or_tab(s_[pos_ + n]))
        ++n;
      emit(TokenKind::Whitespace, n);
      return;
    }
    if (c == '#') {
      emit(TokenKind::Comment, s_.size() - pos_);
      return;
    }
    if (c == '"' || c == '\'') {
      scan_string(c);
      return;
    }
    if (c == '`') {
      scan_backtick_name();
      return;
    }
    if (is_digit(c) || (c == '.' && is_digit(peek()))) {
      scan_number();
      return;
    }
    if (is_ident_start(c) || c == '.') {
      if (c == '.' && !is_ident_continue(peek())) {
        emit(TokenKind::Period, 1);
        return;
      }
      scan_identifier();
      return;
    }
    scan_operator();
  }

  void scan_string(char quote) {
    std::size_t j = pos_ + 1;
    while (j < s_.size()) {
      if (s_[j] == '\\') {
        j += 2; // escape; may step past the end on a trailing backslash
        continue;
      }
      if (s_[j] == quote) {
        emit(TokenKind::String, j - pos_ + 1);
        return;
      }
      ++j;
    }
    warn("unterminated string literal");
    emit(TokenKind::String, s_.size() - pos_);
  }

  // Backtick-quoted names lex as Identifier (heuristic; see module notes).
  void scan_backtick_name() {
    std::size_t j = pos_ + 1;
    while (j < s_.size() && s_[j] != '`')
      ++j;
    if (j >= s_.size()) {
      warn("unterminated backtick name");
      emit(TokenKind::Identifier, s_.size() - pos_);
      return;
    }
    emit(TokenKind::Identifier, j - pos_ + 1);
  }

  void scan_number() {
    std::size_t j = pos_;
    if (cur() == '0' && (peek() == 'x' || peek() == 'X') &&
        is_hex_digit(peek(2))) {
      j += 2;
      while (j < s_.size() && is_hex_digit(s_[j]))
        ++j;
    } else {
      while (j < s_.size() && is_digit(s_[j]))
        ++j;
      if (j < s_.size() && s_[j] == '.') {
        ++j;
        while (j < s_.size() && is_digit(s_[j]))
          ++j;
      }
      if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s_.size() && (s_[k] == '+' || s_[k] == '-'))
          ++k;
        if (k < s_.size() && is_digit(s_[k])) {
          ++k;
          while (k < s_.size() && is_digit(s_[k]))
            ++k;
          j = k;
        }
      }
    }
    if (j < s_.size() && (s_[j] == 'L' || s_[j] == 'i'))
      ++j;
    emit(TokenKind::Number, j - pos_);
  }

  void scan_identifier() {
    std::size_t j = pos_ + 1;
    while (j < s_.size() && is_ident_continue(s_[j]))
      ++j;
    std::string_view lexeme = s_.substr(pos_, j - pos_);
    emit(r_keywords().count(lexeme) ? TokenKind::Keyword
                                    : TokenKind::Identifier,
         j - pos_);
  }

  void scan_operator() {
    switch (cur()) {
    case '<':
      if (match("<<-")) { emit(TokenKind::AssignOp, 3); return; }
      if (match("<-")) { emit(TokenKind::AssignOp, 2); return; }
      if (match("<=")) { emit(TokenKind::ComparisonOp, 2); return; }
      emit(TokenKind::ComparisonOp, 1);
      return;
    case '>':
      if (match(">=")) { emit(TokenKind::ComparisonOp, 2); return; }
      emit(TokenKind::ComparisonOp, 1);
      return;
    case '-':
      if (match("->>")) { emit(TokenKind::AssignOp, 3); return; }
      if (match("->")) { emit(TokenKind::AssignOp, 2); return; }
      emit(TokenKind::ArithmeticOp, 1);
      return;
    case '=':
      if (match("==")) { emit(TokenKind::ComparisonOp, 2); return; }
      emit(TokenKind::AssignOp, 1);
      return;
    case '!':
      if (match("!=")) { emit(TokenKind::ComparisonOp, 2); return; }
      emit(TokenKind::OtherOp, 1);
      return;
    case '%': {
      if (match("%%")) { emit(TokenKind::ArithmeticOp, 2); return; }
      if (match("%/%")) { emit(TokenKind::ArithmeticOp, 3); return; }
      // user infix operator %...% (e.g. %in%, %>%)
      std::size_t close = s_.find('%', pos_ + 1);
      if (close != std::string_view::npos) {
        emit(TokenKind::OtherOp, close - pos_ + 1);
        return;
      }
      emit(TokenKind::OtherOp, 1);
      return;
    }
    case '+':
    case '*':
    case '/':
    case '^':
      emit(TokenKind::ArithmeticOp, 1);
      return;
    case ',':
      emit(TokenKind::Comma, 1);
      return;
    case '(':
      emit(TokenKind::OpenParen, 1);
      ++depth_paren_;
      return;
    case ')':
      if (depth_paren_ > 0)
        --depth_paren_;
      emit(TokenKind::CloseParen, 1);
      return;
    case '[':
      emit(TokenKind::OpenBracket, 1);
      ++depth_bracket_;
      return;
    case ']':
      if (depth_bracket_ > 0)
        --depth_bracket_;
      emit(TokenKind::CloseBracket, 1);
      return;
    case '{':
      emit(TokenKind::OpenBrace, 1);
      return;
    case '}':
      emit(TokenKind::CloseBrace, 1);
      return;
    case ':': {
      std::size_t n = 1;
      while (n < 3 && pos_ + n < s_.size() && s_[pos_ + n] == ':')
        ++n;
      emit(TokenKind::OtherOp, n); // : / :: / :::
      return;
    }
    case '&':
      emit(TokenKind::OtherOp, match("&&") ? 2 : 1);
      return;
    case '|':
      emit(TokenKind::OtherOp, match("||") ? 2 : 1);
      return;
    default:
      emit(TokenKind::OtherOp, 1);
      return;
    }
  }
};

} // namespace detail

/// Tokenizes a source file. Never fails: malformed input degrades to
/// OtherOp tokens and warnings (e.g. unterminated strings). Every
/// non-whitespace character belongs to exactly one token; `#` outside a
/// string opens a Comment running to end of line; quote-delimited strings
/// honor backslash escapes and are never re-tokenized.
inline LexResult tokenize(const SourceFile &src) {
  LexResult result;
  for (std::size_t l = 0; l < src.lines.size(); ++l)
    detail::LineScanner(src.lines[l], static_cast<int>(l), result).run();
  return result;
}

} // namespace re3
