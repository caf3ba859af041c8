#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "re3/common.hpp"
#include "re3/lexer.hpp"
#include "re3/manifest.hpp"

namespace re3 {

/// External R packages detected in a set of source files, with per-file
/// provenance (1-based line numbers, as printed by diagnostics).
struct DependencyReport {
  std::vector<std::string> packages; // sorted, de-duplicated
  std::map<std::string, std::vector<std::pair<std::string, int>>> provenance;
};

enum class FindingKind {
  AbsolutePath,
  SetwdCall,
  MissingReferencedFile,
  InstallCall,
  UndeclaredRVersionMention,
};

enum class Severity { Warn, Error };

struct StaticFinding {
  FindingKind kind = FindingKind::AbsolutePath;
  std::string file;
  int line = 0; // 1-based
  std::string excerpt;
  Severity severity = Severity::Warn;
};

inline std::string_view finding_kind_name(FindingKind k) {
  switch (k) {
  case FindingKind::AbsolutePath: return "AbsolutePath";
  case FindingKind::SetwdCall: return "SetwdCall";
  case FindingKind::MissingReferencedFile: return "MissingReferencedFile";
  case FindingKind::InstallCall: return "InstallCall";
  case FindingKind::UndeclaredRVersionMention:
    return "UndeclaredRVersionMention";
  }
  return "AbsolutePath";
}

namespace detail {

inline bool valid_package_name(std::string_view name) {
  if (name.empty() || !is_alpha(name.front()))
    return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return is_alpha(c) || is_digit(c) || c == '.';
  });
}

inline std::string strip_quotes(const std::string &text) {
  if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
      text.back() == text.front())
    return text.substr(1, text.size() - 2);
  return text;
}

/// Non-whitespace tokens of one file in stream order, with the original
/// index kept so same-line adjacency checks stay cheap.
inline std::vector<const Token *> code_tokens(const std::vector<Token> &toks) {
  std::vector<const Token *> out;
  out.reserve(toks.size());
  for (const Token &t : toks)
    if (t.kind != TokenKind::Whitespace && t.kind != TokenKind::Comment)
      out.push_back(&t);
  return out;
}

inline bool is_open_paren(const Token *t) {
  return t && t->kind == TokenKind::OpenParen;
}

} // namespace detail

/// Collects package names from library(X), require(X),
/// requireNamespace("X"), pacman::p_load(a, b, ...) calls and pkg::fn
/// namespace uses. Works on tokens, so matches inside strings or comments
/// are never picked up; quoted arguments are unquoted.
inline DependencyReport
scan_dependencies(const std::vector<SourceFile> &files) {
  DependencyReport report;
  std::set<std::string> unique;

  auto record = [&](const std::string &file, int line0,
                    const std::string &pkg) {
    if (!detail::valid_package_name(pkg))
      return;
    unique.insert(pkg);
    report.provenance[file].emplace_back(pkg, line0 + 1);
  };

  for (const SourceFile &src : files) {
    LexResult lex = tokenize(src);
    std::vector<const Token *> toks = detail::code_tokens(lex.tokens);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const Token &t = *toks[i];
      if (t.kind != TokenKind::Identifier)
        continue;
      auto next = [&](std::size_t off) -> const Token * {
        return i + off < toks.size() ? toks[i + off] : nullptr;
      };

      // pkg::fn — the namespace itself is a dependency
      const Token *after = next(1);
      if (after && after->kind == TokenKind::OtherOp &&
          (after->text == "::" || after->text == ":::"))
        record(src.path, t.line, t.text);

      bool load_one = t.text == "library" || t.text == "require" ||
                      t.text == "requireNamespace";
      bool load_many =
          t.text == "p_load" &&
          !(i >= 2 && toks[i - 1]->kind == TokenKind::OtherOp &&
            toks[i - 1]->text == "::" && toks[i - 2]->text != "pacman");
      if (!load_one && !load_many)
        continue;
      if (!detail::is_open_paren(next(1)))
        continue;

      // walk the argument list at this call's depth
      std::size_t j = i + 2;
      int depth = 1;
      bool expect_value = true;
      while (j < toks.size() && depth > 0) {
        const Token &a = *toks[j];
        if (a.kind == TokenKind::OpenParen) {
          ++depth;
        } else if (a.kind == TokenKind::CloseParen) {
          --depth;
        } else if (depth == 1) {
          if (a.kind == TokenKind::Comma) {
            expect_value = true;
          } else if (expect_value && (a.kind == TokenKind::Identifier ||
                                      a.kind == TokenKind::String)) {
            const Token *eq = j + 1 < toks.size() ? toks[j + 1] : nullptr;
            if (a.kind == TokenKind::Identifier && eq &&
                eq->kind == TokenKind::AssignOp && eq->text == "=") {
              j += 2; // named argument: skip "name =", the value comes next
              continue;
            }
            record(src.path, a.line, detail::strip_quotes(a.text));
            expect_value = false;
            if (load_one)
              break; // only the first argument names the package
          } else {
            expect_value = false;
          }
        }
        ++j;
      }
    }
  }

  report.packages.assign(unique.begin(), unique.end());
  return report;
}

namespace detail {

inline bool looks_absolute_path(std::string_view s) {
  if (s.size() >= 3 && is_alpha(s[0]) && s[1] == ':' &&
      (s[2] == '/' || s[2] == '\\'))
    return true; // windows drive
  return s.starts_with("/home/") || s.starts_with("/Users/") ||
         s.starts_with("~/");
}

/// First string argument of the call opening at token index `open`, if it
/// is a plain literal.
inline const Token *first_string_arg(const std::vector<const Token *> &toks,
                                     std::size_t open) {
  if (open >= toks.size() || toks[open]->kind != TokenKind::OpenParen)
    return nullptr;
  std::size_t j = open + 1;
  if (j < toks.size() && toks[j]->kind == TokenKind::Identifier &&
      j + 1 < toks.size() && toks[j + 1]->kind == TokenKind::AssignOp &&
      toks[j + 1]->text == "=")
    j += 2; // file = "..."
  if (j < toks.size() && toks[j]->kind == TokenKind::String)
    return toks[j];
  return nullptr;
}

inline bool scan_binary_like(const std::string &text) {
  return text.find('\0') != std::string::npos;
}

/// Findings carry the trimmed source line (capped) so the excerpt is always
/// a substring of the line it points at.
inline std::string excerpt_of(std::string_view line) {
  std::size_t begin = 0, end = line.size();
  while (begin < end && is_space_or_tab(line[begin]))
    ++begin;
  while (end > begin && is_space_or_tab(line[end - 1]))
    --end;
  std::string_view trimmed = line.substr(begin, end - begin);
  return std::string(trimmed.substr(0, 120));
}

} // namespace detail

/// Flags the common reproducibility hazards: absolute paths in strings,
/// setwd() calls, file-reading calls whose relative path target is missing
/// from the package, install.packages() calls, and "R x.y.z" version
/// mentions anywhere in the package that contradict the manifest.
inline std::vector<StaticFinding>
static_checks(const std::vector<SourceFile> &files, const Manifest &manifest) {
  namespace fs = std::filesystem;
  std::vector<StaticFinding> findings;
  static const std::set<std::string> kReaders = {
      "read.csv", "read.table", "readRDS", "load", "source", "read_csv"};

  for (const SourceFile &src : files) {
    LexResult lex = tokenize(src);
    std::vector<const Token *> toks = detail::code_tokens(lex.tokens);
    auto line_excerpt = [&src](int line0) {
      return detail::excerpt_of(src.lines[static_cast<std::size_t>(line0)]);
    };
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const Token &t = *toks[i];
      if (t.kind == TokenKind::String) {
        std::string value = detail::strip_quotes(t.text);
        if (detail::looks_absolute_path(value))
          findings.push_back({FindingKind::AbsolutePath, src.path, t.line + 1,
                              line_excerpt(t.line), Severity::Warn});
        continue;
      }
      if (t.kind != TokenKind::Identifier)
        continue;
      if (t.text == "setwd" && i + 1 < toks.size() &&
          detail::is_open_paren(toks[i + 1])) {
        const Token *arg = detail::first_string_arg(toks, i + 1);
        bool absolute =
            arg && detail::looks_absolute_path(detail::strip_quotes(arg->text));
        findings.push_back({FindingKind::SetwdCall, src.path, t.line + 1,
                            line_excerpt(t.line),
                            absolute ? Severity::Error : Severity::Warn});
      } else if (t.text == "install.packages" && i + 1 < toks.size() &&
                 detail::is_open_paren(toks[i + 1])) {
        findings.push_back({FindingKind::InstallCall, src.path, t.line + 1,
                            line_excerpt(t.line), Severity::Warn});
      } else if (kReaders.count(t.text) && i + 1 < toks.size() &&
                 detail::is_open_paren(toks[i + 1])) {
        const Token *arg = detail::first_string_arg(toks, i + 1);
        if (!arg)
          continue;
        std::string rel = detail::strip_quotes(arg->text);
        if (rel.empty() || detail::looks_absolute_path(rel) ||
            rel.starts_with("http://") || rel.starts_with("https://"))
          continue;
        if (!fs::exists(manifest.root / rel))
          findings.push_back({FindingKind::MissingReferencedFile, src.path,
                              t.line + 1, line_excerpt(t.line),
                              Severity::Error});
      }
    }
  }

  // "R x.y.z" mentions in any package file that disagree with the manifest
  static const std::regex version_re(
      R"((^|[^A-Za-z0-9])R ([0-9]+\.[0-9]+(\.[0-9]+)?))");
  std::vector<fs::path> paths;
  for (const auto &entry : fs::recursive_directory_iterator(manifest.root))
    if (entry.is_regular_file())
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const fs::path &p : paths) {
    std::error_code ec;
    if (fs::file_size(p, ec) > (1u << 20) || ec)
      continue;
    std::string text = read_file(p);
    if (detail::scan_binary_like(text))
      continue;
    std::vector<std::string> lines = split_lines(text);
    std::string rel = fs::relative(p, manifest.root).generic_string();
    for (std::size_t li = 0; li < lines.size(); ++li) {
      for (std::sregex_iterator it(lines[li].begin(), lines[li].end(),
                                   version_re),
           end;
           it != end; ++it) {
        std::string mentioned = (*it)[2].str();
        if (mentioned != manifest.r_version)
          findings.push_back({FindingKind::UndeclaredRVersionMention, rel,
                              static_cast<int>(li + 1),
                              detail::excerpt_of(lines[li]), Severity::Warn});
      }
    }
  }
  return findings;
}

} // namespace re3
