#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "re3/common.hpp"

namespace re3 {

/// Replication-package metadata, read from <package>/manifest.json.
struct Manifest {
  std::string author;
  std::string title;
  std::string r_version; // x.y or x.y.z
  std::string code_license;
  std::string data_license;
  std::vector<std::string> keywords;
  std::vector<std::string> execution_order; // relative .R/.r paths, in order
  std::vector<std::string> data_files;
  std::string on_error = "abort"; // abort | keep_going
  std::string created_at;         // manifest file mtime (informational)
  std::filesystem::path root;     // package directory
};

inline bool valid_r_version(const std::string &v) {
  int dots = 0;
  bool digit_before = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    char c = v[i];
    if (c >= '0' && c <= '9') {
      digit_before = true;
    } else if (c == '.') {
      if (!digit_before || ++dots > 2)
        return false;
      digit_before = false;
    } else {
      return false;
    }
  }
  return digit_before && dots >= 1;
}

inline bool is_r_file(const std::string &path) {
  return path.size() > 2 && (path.ends_with(".R") || path.ends_with(".r"));
}

namespace detail {

inline std::string file_mtime_iso(const std::filesystem::path &p) {
  std::error_code ec;
  auto ftime = std::filesystem::last_write_time(p, ec);
  if (ec)
    return "";
  auto sys = std::chrono::file_clock::to_sys(ftime);
  std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::time_point_cast<std::chrono::seconds>(sys));
  std::tm tm{};
  if (!gmtime_r(&t, &tm))
    return "";
  char buf[32] = {};
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace detail

/// Parses and validates a manifest file. Checks the exact key set, the
/// R-version format, and that every listed code/data file exists under the
/// package root (the manifest's directory).
inline Manifest validate_manifest(const std::filesystem::path &manifest_path) {
  namespace fs = std::filesystem;
  if (!fs::is_regular_file(manifest_path))
    throw Error(Errc::FileNotFound,
                "manifest not found: " + manifest_path.string());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::MalformedRow,
                manifest_path.string() + ": not valid JSON: " + e.what());
  }
  if (!j.is_object())
    throw Error(Errc::MalformedRow,
                manifest_path.string() + ": manifest must be a JSON object");

  static const std::set<std::string> kAllowed = {
      "author",       "title",      "r_version",
      "code_license", "data_license", "keywords",
      "execution_order", "data_files", "on_error"};
  for (const auto &[key, _] : j.items())
    if (!kAllowed.count(key))
      throw Error(Errc::UnknownField,
                  "unknown manifest key \"" + key + "\"");
  for (const char *key :
       {"author", "title", "r_version", "code_license", "data_license",
        "keywords", "execution_order", "data_files"})
    if (!j.contains(key))
      throw Error(Errc::MissingField,
                  std::string("missing manifest field \"") + key + "\"");

  Manifest m;
  m.root = manifest_path.parent_path();
  m.created_at = detail::file_mtime_iso(manifest_path);
  try {
    m.author = j.at("author").get<std::string>();
    m.title = j.at("title").get<std::string>();
    m.r_version = j.at("r_version").get<std::string>();
    m.code_license = j.at("code_license").get<std::string>();
    m.data_license = j.at("data_license").get<std::string>();
    m.keywords = j.at("keywords").get<std::vector<std::string>>();
    m.execution_order = j.at("execution_order").get<std::vector<std::string>>();
    m.data_files = j.at("data_files").get<std::vector<std::string>>();
    if (j.contains("on_error"))
      m.on_error = j.at("on_error").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::MalformedRow,
                manifest_path.string() + ": wrong field type: " + e.what());
  }

  if (m.r_version.empty())
    throw Error(Errc::MissingField, "r_version must not be empty");
  if (!valid_r_version(m.r_version))
    throw Error(Errc::BadRVersion,
                "r_version \"" + m.r_version + "\" is not x.y or x.y.z");
  if (m.on_error != "abort" && m.on_error != "keep_going")
    throw Error(Errc::MalformedRow,
                "on_error must be \"abort\" or \"keep_going\"");
  if (m.execution_order.empty())
    throw Error(Errc::MissingField, "execution_order must not be empty");

  std::set<std::string> seen;
  for (const std::string &entry : m.execution_order) {
    if (!is_r_file(entry))
      throw Error(Errc::MalformedRow,
                  "execution_order entry \"" + entry +
                      "\" must end in .R or .r");
    if (!seen.insert(entry).second)
      throw Error(Errc::DuplicateOrderEntry,
                  "duplicate execution_order entry \"" + entry + "\"");
    if (!fs::is_regular_file(m.root / entry))
      throw Error(Errc::FileNotFound,
                  "execution_order entry \"" + entry +
                      "\" does not exist in the package");
  }
  for (const std::string &entry : m.data_files)
    if (!fs::is_regular_file(m.root / entry))
      throw Error(Errc::FileNotFound,
                  "data file \"" + entry + "\" does not exist in the package");
  return m;
}

/// Writes a starter manifest.json for a package directory, pre-filling the
/// execution order with the .R files found (sorted) and data_files with
/// everything else.
inline std::filesystem::path init_manifest(const std::filesystem::path &dir,
                                           bool force = false) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw Error(Errc::FileNotFound, "no such directory: " + dir.string());
  fs::path out = dir / "manifest.json";
  if (fs::exists(out) && !force)
    throw Error(Errc::IoError,
                out.string() + " already exists (use --force to overwrite)");

  std::vector<std::string> code, data;
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file())
      continue;
    std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json" || rel == "Dockerfile" || rel == "re3_run.sh" ||
        rel.starts_with(".re3_logs/") || rel == "re3_status.json" ||
        rel.starts_with("."))
      continue;
    (is_r_file(rel) ? code : data).push_back(rel);
  }
  std::sort(code.begin(), code.end());
  std::sort(data.begin(), data.end());

  nlohmann::ordered_json j;
  j["author"] = "";
  j["title"] = dir.filename().string();
  j["r_version"] = "3.6"; // a widely available default; adjust to the
                          // version the code was written against
  j["code_license"] = "";
  j["data_license"] = "";
  j["keywords"] = nlohmann::json::array();
  j["execution_order"] = code;
  j["data_files"] = data;
  j["on_error"] = "abort";
  write_file(out, j.dump(2) + "\n");
  return out;
}

} // namespace re3
