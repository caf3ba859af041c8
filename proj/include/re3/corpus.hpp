#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "re3/common.hpp"
#include "re3/features.hpp"
#include "re3/manifest.hpp"
#include "re3/model.hpp"

namespace re3 {

struct CorpusRecord {
  std::string path; // relative to the corpus root
  std::string group;
  double score = 0.0;
  FeatureVector features;
  int line_count = 0;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct CorpusResult {
  std::vector<CorpusRecord> records; // sorted by path
  std::vector<SkippedFile> skipped;
};

struct GroupStats {
  std::string group;
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<int> histogram; // fixed bins over [1, 10]
};

struct DistributionReport {
  double bin_width = 0.5;
  std::vector<GroupStats> groups; // lexicographic by group
};

namespace detail {

/// Group of a file: sidecar groups.csv ("path,group" rows) when present,
/// else the first path segment, else "unknown".
inline std::string group_for(const std::string &rel,
                             const std::map<std::string, std::string> &sidecar) {
  auto it = sidecar.find(rel);
  if (it != sidecar.end() && !it->second.empty())
    return it->second;
  std::size_t slash = rel.find('/');
  if (slash != std::string::npos && slash > 0)
    return rel.substr(0, slash);
  return "unknown";
}

inline std::map<std::string, std::string>
load_group_sidecar(const std::filesystem::path &dir) {
  std::map<std::string, std::string> groups;
  std::filesystem::path sidecar = dir / "groups.csv";
  if (!std::filesystem::is_regular_file(sidecar))
    return groups;
  std::vector<std::string> lines = split_lines(read_file(sidecar));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string &line = lines[i];
    if (line.empty() || (i == 0 && line == "path,group"))
      continue;
    std::size_t comma = line.rfind(',');
    if (comma == std::string::npos)
      continue;
    groups[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return groups;
}

} // namespace detail

inline constexpr std::uintmax_t kCorpusMaxFileBytes = 1 << 20;

/// Scores every .R/.r file under `dir` with the model. Files that cannot
/// be scored (empty, oversized, unreadable) land in the skip list rather
/// than being dropped silently.
inline CorpusResult score_corpus(const std::filesystem::path &dir,
                                 const ReadabilityModel &model) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw Error(Errc::NoFilesFound, "no such directory: " + dir.string());

  std::vector<fs::path> files;
  for (const auto &entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && is_r_file(entry.path().filename().string()))
      files.push_back(entry.path());
  if (files.empty())
    throw Error(Errc::NoFilesFound,
                "no .R files found under " + dir.string());
  std::sort(files.begin(), files.end());

  std::map<std::string, std::string> sidecar = detail::load_group_sidecar(dir);

  CorpusResult result;
  for (const fs::path &p : files) {
    std::string rel = fs::relative(p, dir).generic_string();
    std::error_code ec;
    std::uintmax_t size = fs::file_size(p, ec);
    if (!ec && size > kCorpusMaxFileBytes) {
      result.skipped.push_back({rel, "FileTooLarge"});
      continue;
    }
    try {
      SourceFile src = SourceFile::load(p);
      CorpusRecord rec;
      rec.path = rel;
      rec.group = detail::group_for(rel, sidecar);
      rec.features = extract_features(src);
      rec.line_count = rec.features.line_count;
      rec.score = predict(model, rec.features);
      result.records.push_back(std::move(rec));
    } catch (const Error &e) {
      // per-file problems go to the skip list; model problems are fatal
      if (e.code() == Errc::EmptyFile)
        result.skipped.push_back({rel, "EmptyFile"});
      else if (e.code() == Errc::IoError)
        result.skipped.push_back({rel, e.what()});
      else
        throw;
    }
  }
  return result;
}

/// Per-group score statistics and histogram. Bin i covers
/// [1 + i*w, 1 + (i+1)*w); the final bin is closed so a score of exactly
/// 10 is counted.
inline DistributionReport
distribution_report(const std::vector<CorpusRecord> &records,
                    double bin_width = 0.5) {
  if (records.empty())
    throw Error(Errc::NoFilesFound, "no records to report on");
  if (!(bin_width > 0.0) || bin_width > 9.0)
    throw Error(Errc::UsageError, "bin width must be in (0, 9]");

  const int bins = static_cast<int>(std::ceil(9.0 / bin_width - 1e-9));
  std::map<std::string, std::vector<double>> by_group;
  for (const CorpusRecord &r : records)
    by_group[r.group].push_back(r.score);

  DistributionReport report;
  report.bin_width = bin_width;
  for (auto &[group, scores] : by_group) {
    std::sort(scores.begin(), scores.end());
    GroupStats g;
    g.group = group;
    g.count = static_cast<int>(scores.size());
    g.min = scores.front();
    g.max = scores.back();
    double sum = 0.0;
    for (double s : scores)
      sum += s;
    g.mean = sum / static_cast<double>(scores.size());
    std::size_t n = scores.size();
    g.median = n % 2 == 1 ? scores[n / 2]
                          : (scores[n / 2 - 1] + scores[n / 2]) / 2.0;
    g.histogram.assign(static_cast<std::size_t>(bins), 0);
    for (double s : scores) {
      int bin = static_cast<int>((s - 1.0) / bin_width);
      bin = std::clamp(bin, 0, bins - 1);
      ++g.histogram[static_cast<std::size_t>(bin)];
    }
    report.groups.push_back(std::move(g));
  }
  return report;
}

} // namespace re3
