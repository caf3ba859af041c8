#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "re3/common.hpp"
#include "re3/depscan.hpp"
#include "re3/manifest.hpp"
#include "re3/proc.hpp"

namespace re3 {

/// Deterministic build recipe for a package: image definition plus the
/// runner script that executes the declared file order and records
/// re3_status.json. Generation is a pure function of (manifest, deps):
/// identical inputs give byte-identical output.
struct ContainerSpec {
  std::string dockerfile_text;
  std::string runner_script_text;
  std::vector<std::string> context_files;
  std::string image_tag;
};

namespace detail {

inline std::string shell_quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

inline std::string json_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '"': out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    case '\t': out += "\\t"; break;
    case '\r': out += "\\r"; break;
    default:
      if (static_cast<unsigned char>(c) < 0x20) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
        out += buf;
      } else {
        out += c;
      }
    }
  }
  return out;
}

inline std::string image_slug(const std::string &title) {
  std::string slug;
  bool dash = false;
  for (char c : title) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      slug += c;
      dash = false;
    } else if (c >= 'A' && c <= 'Z') {
      slug += static_cast<char>(c - 'A' + 'a');
      dash = false;
    } else if (!slug.empty() && !dash) {
      slug += '-';
      dash = true;
    }
  }
  while (!slug.empty() && slug.back() == '-')
    slug.pop_back();
  return slug.empty() ? "package" : slug;
}

} // namespace detail

/// Generates the Dockerfile and runner script. The image builds a Conda
/// environment pinning r-base to the manifest's R version plus r-<pkg> for
/// every scanned dependency (conda-forge channel); the runner executes the
/// declared order with a per-file timeout taken from RE3_FILE_TIMEOUT and
/// aborts or continues per the manifest's on_error policy.
inline ContainerSpec generate_container_spec(const Manifest &manifest,
                                             const DependencyReport &deps) {
  ContainerSpec spec;
  spec.image_tag = "re3/" + detail::image_slug(manifest.title) + ":latest";

  std::string conda_pkgs = "r-base=" + manifest.r_version;
  for (const std::string &pkg : deps.packages)
    conda_pkgs += " r-" + to_lower(pkg);

  spec.dockerfile_text =
      "FROM continuumio/miniconda3:4.12.0\n"
      "RUN conda create --yes --name re3 --channel conda-forge " +
      conda_pkgs +
      " && \\\n"
      "    conda clean --all --yes\n"
      "WORKDIR /workspace\n"
      "COPY . /workspace\n"
      "ENTRYPOINT [\"conda\", \"run\", \"--no-capture-output\", \"--name\", "
      "\"re3\", \"bash\", \"/workspace/re3_run.sh\"]\n";

  const bool keep_going = manifest.on_error == "keep_going";
  std::string script =
      "#!/usr/bin/env bash\n"
      "# Generated by re3. Runs the package's code files in their declared\n"
      "# order and records per-file status to re3_status.json.\n"
      "set -u\n"
      "cd \"$(dirname \"$0\")\"\n"
      "LOG_DIR=\".re3_logs\"\n"
      "STATUS_FILE=\"re3_status.json\"\n"
      "FILE_TIMEOUT=\"${RE3_FILE_TIMEOUT:-3600}\"\n"
      "mkdir -p \"$LOG_DIR\"\n"
      "entries=\"\"\n"
      "overall=0\n"
      "aborted=0\n"
      "\n"
      "run_file() {\n"
      "  local idx=\"$1\" path=\"$2\" jpath=\"$3\"\n"
      "  local out err t0 t1 code dur\n"
      "  out=$(printf '%s/%03d.out' \"$LOG_DIR\" \"$idx\")\n"
      "  err=$(printf '%s/%03d.err' \"$LOG_DIR\" \"$idx\")\n"
      "  t0=$(date +%s.%N)\n"
      "  timeout \"$FILE_TIMEOUT\" Rscript \"$path\" >\"$out\" 2>\"$err\"\n"
      "  code=$?\n"
      "  t1=$(date +%s.%N)\n"
      "  dur=$(awk -v a=\"$t0\" -v b=\"$t1\" 'BEGIN { printf \"%.3f\", b - a "
      "}')\n"
      "  if [ -n \"$entries\" ]; then entries=\"$entries,\"; fi\n"
      "  entries=\"$entries{\\\"path\\\":\\\"$jpath\\\",\\\"exit_code\\\":"
      "$code,\\\"duration_s\\\":$dur}\"\n"
      "  if [ \"$code\" -ne 0 ]; then overall=1; fi\n"
      "  return \"$code\"\n"
      "}\n"
      "\n";
  for (std::size_t i = 0; i < manifest.execution_order.size(); ++i) {
    const std::string &path = manifest.execution_order[i];
    std::string call = "run_file " + std::to_string(i) + " " +
                       detail::shell_quote(path) + " " +
                       detail::shell_quote(detail::json_escape(path));
    if (keep_going)
      script += call + " || true\n";
    else
      script += "if [ \"$aborted\" -eq 0 ]; then " + call +
                " || aborted=1; fi\n";
  }
  script += "\n"
            "printf '{\"files\":[%s]}\\n' \"$entries\" > \"$STATUS_FILE\"\n"
            "exit \"$overall\"\n";
  spec.runner_script_text = script;

  spec.context_files = manifest.execution_order;
  for (const std::string &d : manifest.data_files)
    spec.context_files.push_back(d);
  spec.context_files.push_back("re3_run.sh");
  return spec;
}

/// Per-file outcome of one package execution. `exit_code` is absent for
/// files that were skipped after an earlier failure under the abort policy.
struct FileRun {
  std::string path;
  std::optional<int> exit_code;
  double duration_s = 0.0;
  std::string stdout_tail;
  std::string stderr_tail;
  bool skipped = false;
};

struct Artifact {
  std::string path;
  std::uint64_t size_bytes = 0;
};

struct ExecutionReport {
  bool success = false; // every file ran and exited 0
  std::vector<FileRun> per_file;
  std::vector<Artifact> artifacts;
  std::string build_log_tail;
};

struct ExecuteConfig {
  std::string runtime_path = "docker";
  int per_file_timeout_s = 3600;
  std::filesystem::path workdir; // package directory
};

namespace detail {

struct FileStamp {
  std::uint64_t size = 0;
  std::int64_t mtime = 0;
};

inline bool generated_path(const std::string &rel) {
  return rel == "Dockerfile" || rel == "re3_run.sh" ||
         rel == "re3_status.json" || rel.starts_with(".re3_logs/");
}

inline std::map<std::string, FileStamp>
snapshot_dir(const std::filesystem::path &dir) {
  namespace fs = std::filesystem;
  std::map<std::string, FileStamp> snap;
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file())
      continue;
    std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (generated_path(rel))
      continue;
    FileStamp stamp;
    stamp.size = entry.file_size();
    stamp.mtime = fs::last_write_time(entry.path())
                      .time_since_epoch()
                      .count();
    snap.emplace(std::move(rel), stamp);
  }
  return snap;
}

inline std::string read_log_tail(const std::filesystem::path &p) {
  std::error_code ec;
  if (!std::filesystem::exists(p, ec))
    return "";
  return tail_lines(read_file(p), 200);
}

} // namespace detail

/// Builds the image and runs the container with the package mounted at
/// /workspace, then assembles the report from re3_status.json, the per-file
/// logs, and a before/after snapshot of the package directory (new or
/// modified files become artifacts). Throws RuntimeNotFound, BuildFailed,
/// or StatusFileMissing; per-file failures produce a report, not an error.
inline ExecutionReport execute(const ContainerSpec &spec,
                               const std::vector<std::string> &execution_order,
                               const ExecuteConfig &cfg) {
  namespace fs = std::filesystem;
  auto runtime = find_executable(cfg.runtime_path);
  if (!runtime)
    throw Error(Errc::RuntimeNotFound,
                "container runtime not found: " + cfg.runtime_path);

  fs::path dir = fs::absolute(cfg.workdir);
  write_file(dir / "Dockerfile", spec.dockerfile_text);
  write_file(dir / "re3_run.sh", spec.runner_script_text);
  fs::permissions(dir / "re3_run.sh",
                  fs::perms::owner_all | fs::perms::group_read |
                      fs::perms::others_read,
                  fs::perm_options::replace);
  std::error_code ec;
  fs::remove(dir / "re3_status.json", ec);
  fs::remove_all(dir / ".re3_logs", ec);

  auto before = detail::snapshot_dir(dir);

  ProcessResult build = run_process(
      {runtime->string(), "build", "-t", spec.image_tag, dir.string()});
  std::string build_log = build.out;
  if (!build.err.empty())
    build_log += (build_log.empty() ? "" : "\n") + build.err;
  if (build.exit_code != 0)
    throw Error(Errc::BuildFailed,
                "image build failed (exit " + std::to_string(build.exit_code) +
                    "):\n" + tail_lines(build_log, 200));

  ProcessResult run = run_process(
      {runtime->string(), "run", "--rm", "-v", dir.string() + ":/workspace",
       "-e", "RE3_FILE_TIMEOUT=" + std::to_string(cfg.per_file_timeout_s),
       spec.image_tag});

  fs::path status_path = dir / "re3_status.json";
  if (!fs::is_regular_file(status_path))
    throw Error(Errc::StatusFileMissing,
                "container finished without writing re3_status.json (exit " +
                    std::to_string(run.exit_code) + "):\n" +
                    tail_lines(run.err, 50));

  std::map<std::string, std::pair<int, double>> statuses;
  try {
    nlohmann::json j = nlohmann::json::parse(read_file(status_path));
    for (const auto &f : j.at("files"))
      statuses[f.at("path").get<std::string>()] = {
          f.at("exit_code").get<int>(), f.at("duration_s").get<double>()};
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::StatusFileMissing,
                "re3_status.json is malformed: " + std::string(e.what()));
  }

  ExecutionReport report;
  report.build_log_tail = tail_lines(build_log, 200);
  bool all_ok = !execution_order.empty();
  for (std::size_t i = 0; i < execution_order.size(); ++i) {
    const std::string &path = execution_order[i];
    FileRun fr;
    fr.path = path;
    auto it = statuses.find(path);
    if (it == statuses.end()) {
      fr.skipped = true;
      all_ok = false;
    } else {
      fr.exit_code = it->second.first;
      fr.duration_s = it->second.second;
      char idx[8];
      std::snprintf(idx, sizeof(idx), "%03zu", i);
      fr.stdout_tail =
          detail::read_log_tail(dir / ".re3_logs" / (std::string(idx) + ".out"));
      fr.stderr_tail =
          detail::read_log_tail(dir / ".re3_logs" / (std::string(idx) + ".err"));
      if (*fr.exit_code != 0)
        all_ok = false;
    }
    report.per_file.push_back(std::move(fr));
  }
  report.success = all_ok;

  auto after = detail::snapshot_dir(dir);
  for (const auto &[rel, stamp] : after) {
    auto it = before.find(rel);
    if (it == before.end() || it->second.size != stamp.size ||
        it->second.mtime != stamp.mtime)
      report.artifacts.push_back({rel, stamp.size});
  }
  return report;
}

} // namespace re3
