#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "re3/common.hpp"
#include "re3/lexer.hpp"
#include "re3/rng.hpp"

namespace re3::test {

/// Self-deleting temporary directory for filesystem-facing tests.
class TempDir {
public:
  TempDir() {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("re3_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return dir_; }

  std::filesystem::path write(const std::string &rel,
                              const std::string &content) const {
    std::filesystem::path p = dir_ / rel;
    std::filesystem::create_directories(p.parent_path());
    re3::write_file(p, content);
    return p;
  }

private:
  std::filesystem::path dir_;
};

inline std::filesystem::path fixture_dir() {
  return std::filesystem::path(RE3_FIXTURE_DIR);
}

/// Writes a stand-in container runtime into `dir` and returns its path.
/// `build` just records the invocation (RE3_STUB_BUILD_EXIT forces a
/// failure); `run` locates the -v mount, then executes the package's
/// generated re3_run.sh with a fake Rscript on PATH. The fake Rscript
/// fails on library() calls for packages not listed in RE3_STUB_PACKAGES
/// and sleeps when it sees Sys.sleep, which is enough to exercise the
/// whole report pipeline without a container engine.
inline std::filesystem::path
write_stub_runtime(const std::filesystem::path &dir) {
  static const char *script = R"SH(#!/usr/bin/env bash
set -u
cmd="${1:-}"; shift || true
if [ -n "${RE3_STUB_LOG:-}" ]; then echo "$cmd $*" >> "$RE3_STUB_LOG"; fi
case "$cmd" in
  build)
    code="${RE3_STUB_BUILD_EXIT:-0}"
    if [ "$code" -ne 0 ]; then
      echo "conda create failed: nothing provides requested package" >&2
    else
      echo "stub: image built"
    fi
    exit "$code"
    ;;
  run)
    if [ "${RE3_STUB_SKIP_RUN:-0}" = "1" ]; then exit 0; fi
    host=""
    prev=""
    for a in "$@"; do
      if [ "$prev" = "-v" ]; then host="${a%%:*}"; fi
      if [ "$prev" = "-e" ]; then export "$a"; fi
      prev="$a"
    done
    if [ -z "$host" ]; then exit 125; fi
    bindir="$(mktemp -d)"
    cat > "$bindir/Rscript" <<'FAKERSCRIPT'
#!/usr/bin/env bash
file="${@: -1}"
avail=",${RE3_STUB_PACKAGES:-},"
while IFS= read -r line; do
  case "$line" in "#"*) continue ;; esac
  case "$line" in *Sys.sleep*) sleep 5 ;; esac
  pkg="$(printf '%s\n' "$line" | sed -n "s/.*library(['\"]\{0,1\}\([A-Za-z0-9.]\+\)['\"]\{0,1\}).*/\1/p")"
  if [ -n "$pkg" ]; then
    case "$avail" in
      *",$pkg,"*) : ;;
      *)
        echo "Error in library($pkg) : there is no package called '$pkg'" >&2
        exit 1
        ;;
    esac
  fi
  case "$line" in
    *write_stub_artifact*) echo "artifact payload" > "stub_output.txt" ;;
  esac
done < "$file"
echo "stub: executed $file"
exit 0
FAKERSCRIPT
    chmod +x "$bindir/Rscript"
    cd "$host" || exit 125
    PATH="$bindir:$PATH" bash re3_run.sh
    rc=$?
    rm -rf "$bindir"
    exit "$rc"
    ;;
  *)
    exit 125
    ;;
esac
)SH";
  std::filesystem::path path = dir / "stub_runtime.sh";
  re3::write_file(path, script);
  std::filesystem::permissions(path, std::filesystem::perms::owner_all |
                                         std::filesystem::perms::group_read |
                                         std::filesystem::perms::others_read);
  return path;
}

/// Writes a minimal valid manifest.json into a package directory.
inline void write_manifest(const std::filesystem::path &dir,
                           const std::string &r_version,
                           const std::vector<std::string> &order,
                           const std::vector<std::string> &data_files = {},
                           const std::string &on_error = "abort") {
  std::string json = "{\n"
                     "  \"author\": \"Test Author\",\n"
                     "  \"title\": \"Test Package\",\n"
                     "  \"r_version\": \"" + r_version + "\",\n"
                     "  \"code_license\": \"MIT\",\n"
                     "  \"data_license\": \"CC0\",\n"
                     "  \"keywords\": [],\n"
                     "  \"execution_order\": [";
  for (std::size_t i = 0; i < order.size(); ++i)
    json += (i ? ", " : "") + std::string("\"") + order[i] + "\"";
  json += "],\n  \"data_files\": [";
  for (std::size_t i = 0; i < data_files.size(); ++i)
    json += (i ? ", " : "") + std::string("\"") + data_files[i] + "\"";
  json += "],\n  \"on_error\": \"" + on_error + "\"\n}\n";
  re3::write_file(dir / "manifest.json", json);
}

/// Random R-looking source text for property tests: a mix of plausible
/// statements and arbitrary printable junk, so invariants are exercised on
/// both well-formed and hostile input.
inline std::string random_source(Rng &rng, int max_lines = 20) {
  static const std::vector<std::string> statements = {
      "x <- 1",
      "y = f(a, b)",
      "# comment with (parens) and \"quotes\"",
      "if (a == \"b#c\") { z <- a }",
      "for (i in 1:10) total <- total + i",
      "df$col[3] <- NA",
      "s <- \"text with # hash\"",
      "m <- matrix(1:9, nrow = 3)",
      "    indented <- TRUE",
      "\tresult <- x %% 2",
      "",
      "plot(x, y)  # trailing comment",
      "name.with.dots <- 'single quoted'",
      "while (n > 0) n <- n %/% 2",
      "val <- .5e3 + 0x1F",
  };
  static const std::string junk_chars =
      "abcXYZ019 \t#\"'`()[]{}<>=!%&|;:,.+-*/^~$@\\_";
  int lines = 1 + static_cast<int>(rng.bounded(static_cast<uint64_t>(max_lines)));
  std::string out;
  for (int l = 0; l < lines; ++l) {
    if (rng.bounded(4) == 0) {
      int len = static_cast<int>(rng.bounded(50));
      for (int i = 0; i < len; ++i)
        out += junk_chars[rng.bounded(junk_chars.size())];
    } else {
      out += statements[rng.bounded(statements.size())];
    }
    out += '\n';
  }
  return out;
}

} // namespace re3::test
