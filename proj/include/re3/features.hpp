#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "re3/common.hpp"
#include "re3/lexer.hpp"

namespace re3 {

/// Canonical feature order. Every array of 22 values in the library
/// (model weights, means, stds) is index-aligned with this enum.
enum class Feature : int {
  AvgArithmetic = 0,
  AvgAssignments,
  AvgBlankLines,
  AvgBranches,
  AvgCommas,
  AvgComments,
  AvgComparison,
  AvgIndentation,
  AvgKeywords,
  AvgLineLength,
  AvgLoops,
  AvgNumbers,
  AvgParens,
  AvgPeriods,
  AvgSpaces,
  AvgVariables,
  MaxCharacter,
  MaxIndentation,
  MaxKeywords,
  MaxLineLength,
  MaxNumbers,
  MaxVariables,
};

inline constexpr int kFeatureCount = 22;

inline const std::array<std::string, kFeatureCount> &feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "avg_arithmetic",  "avg_assignments", "avg_blank_lines",
      "avg_branches",    "avg_commas",      "avg_comments",
      "avg_comparison",  "avg_indentation", "avg_keywords",
      "avg_line_length", "avg_loops",       "avg_numbers",
      "avg_parens",      "avg_periods",     "avg_spaces",
      "avg_variables",   "max_character",   "max_indentation",
      "max_keywords",    "max_line_length", "max_numbers",
      "max_variables"};
  return names;
}

/// The 22 structural features of one file: per-line averages over the total
/// line count plus per-file maxima.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  int line_count = 0;

  double &operator[](Feature f) { return values[static_cast<int>(f)]; }
  double operator[](Feature f) const { return values[static_cast<int>(f)]; }
};

/// Raw per-line counts feeding the feature vector. Whitespace-only lines
/// count as blank; a blank line contributes zero to every count (including
/// spaces and indentation) but keeps its real character length.
struct LineMetrics {
  int length_chars = 0;
  int indent_cols = 0; // leading whitespace, tab = 4 columns
  int arithmetic_ops = 0;
  int assignments = 0;
  int branches = 0;
  int commas = 0;
  int comments = 0; // 1 if the line contains a comment
  int comparison_ops = 0;
  int keywords = 0;
  int loops = 0;
  int numbers = 0;
  int parens = 0;
  int periods = 0;
  int spaces = 0;
  int variables = 0;
  bool is_blank = false;
  int max_single_char_count = 0;
};

namespace detail {

inline bool line_is_blank(std::string_view raw) {
  return std::all_of(raw.begin(), raw.end(), is_space_or_tab);
}

inline int indent_columns(std::string_view raw) {
  int cols = 0;
  for (char c : raw) {
    if (c == ' ')
      cols += 1;
    else if (c == '\t')
      cols += 4;
    else
      break;
  }
  return cols;
}

inline bool is_loop_keyword(std::string_view t) {
  return t == "for" || t == "while" || t == "repeat";
}

/// Most frequent single non-whitespace character on the line, with string
/// and comment interiors masked out (delimiters still count).
inline int max_single_char(std::string_view raw,
                           const std::vector<const Token *> &line_tokens) {
  std::vector<bool> masked(raw.size(), false);
  for (const Token *t : line_tokens) {
    std::size_t begin = static_cast<std::size_t>(t->col);
    std::size_t end = begin + t->text.size();
    if (t->kind == TokenKind::Comment) {
      for (std::size_t i = begin + 1; i < end && i < raw.size(); ++i)
        masked[i] = true;
    } else if (t->kind == TokenKind::String) {
      std::size_t last = detail::string_token_closed(t->text) ? end - 1 : end;
      for (std::size_t i = begin + 1; i < last && i < raw.size(); ++i)
        masked[i] = true;
    }
  }
  std::array<int, 256> counts{};
  int best = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(raw[i]);
    if (masked[i] || c == ' ' || c == '\t')
      continue;
    best = std::max(best, ++counts[c]);
  }
  return best;
}

} // namespace detail

/// Per-line category counts from a token stream. Category rules:
/// assignments are the arrow operators plus `=` outside parentheses
/// (named-argument `=` is binding, not assignment); branches are `if` plus
/// any `else` not directly followed by `if` on the same line; variables are
/// identifiers outside () and [] that do not name a call; periods count `.`
/// characters outside strings, comments, and numeric literals.
inline std::vector<LineMetrics>
extract_line_metrics(const std::vector<Token> &tokens, const SourceFile &src) {
  std::vector<std::vector<const Token *>> by_line(src.line_count());
  for (const Token &t : tokens)
    by_line[static_cast<std::size_t>(t.line)].push_back(&t);

  auto next_code_token = [](const std::vector<const Token *> &line,
                            std::size_t i) -> const Token * {
    for (std::size_t j = i + 1; j < line.size(); ++j) {
      if (line[j]->kind == TokenKind::Whitespace ||
          line[j]->kind == TokenKind::Comment)
        continue;
      return line[j];
    }
    return nullptr;
  };

  std::vector<LineMetrics> metrics(src.line_count());
  for (std::size_t l = 0; l < src.line_count(); ++l) {
    const std::string &raw = src.lines[l];
    LineMetrics &m = metrics[l];
    m.length_chars = static_cast<int>(raw.size());
    m.is_blank = detail::line_is_blank(raw);
    if (m.is_blank)
      continue;
    m.indent_cols = detail::indent_columns(raw);
    m.spaces = static_cast<int>(std::count(raw.begin(), raw.end(), ' '));
    m.max_single_char_count = detail::max_single_char(raw, by_line[l]);

    const auto &line = by_line[l];
    for (std::size_t i = 0; i < line.size(); ++i) {
      const Token &t = *line[i];
      switch (t.kind) {
      case TokenKind::ArithmeticOp:
        ++m.arithmetic_ops;
        break;
      case TokenKind::AssignOp:
        if (t.text != "=" || t.depth_paren == 0)
          ++m.assignments;
        break;
      case TokenKind::Keyword: {
        ++m.keywords;
        if (detail::is_loop_keyword(t.text))
          ++m.loops;
        if (t.text == "if") {
          ++m.branches;
        } else if (t.text == "else") {
          const Token *next = next_code_token(line, i);
          if (!(next && next->kind == TokenKind::Keyword &&
                next->text == "if"))
            ++m.branches;
        }
        break;
      }
      case TokenKind::Identifier: {
        if (t.depth_paren == 0 && t.depth_bracket == 0) {
          const Token *next = next_code_token(line, i);
          if (!(next && next->kind == TokenKind::OpenParen))
            ++m.variables;
        }
        break;
      }
      case TokenKind::Number:
        ++m.numbers;
        break;
      case TokenKind::OpenParen:
      case TokenKind::CloseParen:
        ++m.parens;
        break;
      case TokenKind::Comma:
        ++m.commas;
        break;
      case TokenKind::ComparisonOp:
        ++m.comparison_ops;
        break;
      case TokenKind::Comment:
        m.comments = 1;
        break;
      default:
        break;
      }
      if (t.kind != TokenKind::String && t.kind != TokenKind::Comment &&
          t.kind != TokenKind::Number)
        m.periods +=
            static_cast<int>(std::count(t.text.begin(), t.text.end(), '.'));
    }
  }
  return metrics;
}

/// Aggregates per-line metrics into the 22-feature vector. Averages divide
/// by the total line count, blank and comment-only lines included.
inline FeatureVector aggregate_features(const std::vector<LineMetrics> &lines) {
  if (lines.empty())
    throw Error(Errc::EmptyFile, "cannot extract features from an empty file");
  FeatureVector f;
  const double n = static_cast<double>(lines.size());
  f.line_count = static_cast<int>(lines.size());

  auto avg = [n](auto sum) { return static_cast<double>(sum) / n; };
  long long arith = 0, assign = 0, blank = 0, branch = 0, comma = 0, comm = 0,
            comp = 0, indent = 0, kw = 0, len = 0, loop = 0, num = 0, par = 0,
            per = 0, sp = 0, var = 0;
  int max_char = 0, max_indent = 0, max_kw = 0, max_len = 0, max_num = 0,
      max_var = 0;
  for (const LineMetrics &m : lines) {
    arith += m.arithmetic_ops;
    assign += m.assignments;
    blank += m.is_blank ? 1 : 0;
    branch += m.branches;
    comma += m.commas;
    comm += m.comments;
    comp += m.comparison_ops;
    indent += m.indent_cols;
    kw += m.keywords;
    len += m.length_chars;
    loop += m.loops;
    num += m.numbers;
    par += m.parens;
    per += m.periods;
    sp += m.spaces;
    var += m.variables;
    max_char = std::max(max_char, m.max_single_char_count);
    max_indent = std::max(max_indent, m.indent_cols);
    max_kw = std::max(max_kw, m.keywords);
    max_len = std::max(max_len, m.length_chars);
    max_num = std::max(max_num, m.numbers);
    max_var = std::max(max_var, m.variables);
  }
  f[Feature::AvgArithmetic] = avg(arith);
  f[Feature::AvgAssignments] = avg(assign);
  f[Feature::AvgBlankLines] = avg(blank);
  f[Feature::AvgBranches] = avg(branch);
  f[Feature::AvgCommas] = avg(comma);
  f[Feature::AvgComments] = avg(comm);
  f[Feature::AvgComparison] = avg(comp);
  f[Feature::AvgIndentation] = avg(indent);
  f[Feature::AvgKeywords] = avg(kw);
  f[Feature::AvgLineLength] = avg(len);
  f[Feature::AvgLoops] = avg(loop);
  f[Feature::AvgNumbers] = avg(num);
  f[Feature::AvgParens] = avg(par);
  f[Feature::AvgPeriods] = avg(per);
  f[Feature::AvgSpaces] = avg(sp);
  f[Feature::AvgVariables] = avg(var);
  f[Feature::MaxCharacter] = max_char;
  f[Feature::MaxIndentation] = max_indent;
  f[Feature::MaxKeywords] = max_kw;
  f[Feature::MaxLineLength] = max_len;
  f[Feature::MaxNumbers] = max_num;
  f[Feature::MaxVariables] = max_var;
  return f;
}

/// Tokenizes `src` and computes its feature vector.
/// Throws Errc::EmptyFile for a file with zero lines.
inline FeatureVector extract_features(const SourceFile &src) {
  LexResult lex = tokenize(src);
  return aggregate_features(extract_line_metrics(lex.tokens, src));
}

} // namespace re3
