#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace re3 {

/// Error categories surfaced by the library. Each maps to a process exit
/// code through exit_code_for().
enum class Errc {
  // feature extraction
  EmptyFile,
  // ratings / model
  MalformedRow,
  UnknownSnippet,
  RatingOutOfRange,
  TooFewSamples,
  NonFiniteFeature,
  ModelFeatureMismatch,
  NoEligibleRaters,
  BadModelFile,
  // manifest / static checks
  MissingField,
  UnknownField,
  BadRVersion,
  FileNotFound,
  DuplicateOrderEntry,
  // container execution
  RuntimeNotFound,
  BuildFailed,
  StatusFileMissing,
  // corpus
  NoFilesFound,
  // generic
  IoError,
  UsageError,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

// Process exit codes: 0 success, 1 validation/static errors, 2 build
// failure, 3 execution failure, 4 environment missing, 64 usage errors.
inline int exit_code_for(Errc code) {
  switch (code) {
  case Errc::BuildFailed:
    return 2;
  case Errc::StatusFileMissing:
    return 3;
  case Errc::RuntimeNotFound:
    return 4;
  case Errc::UsageError:
    return 64;
  default:
    return 1;
  }
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::IoError, "cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path &path,
                       std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::IoError, "cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out)
    throw Error(Errc::IoError, "write failed: " + path.string());
}

/// Splits text on LF. A trailing newline does not produce a final empty
/// element, so "" yields no lines and "a\n" yields {"a"}.
inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size())
        lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

/// Last `n` lines of `text`, joined with LF.
inline std::string tail_lines(std::string_view text, std::size_t n) {
  std::vector<std::string> lines = split_lines(text);
  std::size_t first = lines.size() > n ? lines.size() - n : 0;
  std::string out;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (i > first)
      out += '\n';
    out += lines[i];
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char &c : out)
    if (c >= 'A' && c <= 'Z')
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline bool is_space_or_tab(char c) { return c == ' ' || c == '\t'; }

} // namespace re3
