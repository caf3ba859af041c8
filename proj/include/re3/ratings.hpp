#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "re3/common.hpp"
#include "re3/lexer.hpp"

namespace re3 {

enum class ExperienceBand { Years0To3, Years3To5, Years5Plus };

/// One (snippet, rater) readability rating on the 1..10 scale, with the
/// optional onboarding answers.
struct RatingRecord {
  std::string snippet_id;
  std::string rater_id;
  int rating = 0;
  std::optional<ExperienceBand> experience;
  std::optional<bool> knows_r;
};

struct RatingsDataset {
  std::vector<RatingRecord> records;
  std::map<std::string, SourceFile> snippets; // snippet_id -> source
};

inline std::string experience_band_name(ExperienceBand b) {
  switch (b) {
  case ExperienceBand::Years0To3: return "0-3";
  case ExperienceBand::Years3To5: return "3-5";
  case ExperienceBand::Years5Plus: return "5+";
  }
  return "";
}

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::filesystem::path
resolve_snippet(const std::filesystem::path &dir, const std::string &id) {
  for (const char *suffix : {"", ".R", ".r"}) {
    std::filesystem::path candidate = dir / (id + suffix);
    if (std::filesystem::is_regular_file(candidate))
      return candidate;
  }
  return {};
}

} // namespace detail

/// Loads the ratings CSV (header: snippet_id,rater_id,rating,
/// experience_band,knows_r) and the referenced snippet files from
/// `snippets_dir` (ids resolve as <id>, <id>.R or <id>.r).
inline RatingsDataset load_ratings(const std::filesystem::path &csv_path,
                                   const std::filesystem::path &snippets_dir) {
  static const char *kHeader = "snippet_id,rater_id,rating,experience_band,knows_r";
  std::vector<std::string> lines = split_lines(read_file(csv_path));
  for (std::string &line : lines)
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
  if (lines.empty() || lines[0] != kHeader)
    throw Error(Errc::MalformedRow,
                csv_path.string() + ":1: expected header \"" +
                    std::string(kHeader) + "\"");

  RatingsDataset ds;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string &line = lines[i];
    if (line.empty())
      continue;
    const std::string where =
        csv_path.string() + ":" + std::to_string(i + 1) + ": ";
    std::vector<std::string> f = detail::split_csv_row(line);
    if (f.size() != 5)
      throw Error(Errc::MalformedRow,
                  where + "expected 5 fields, got " + std::to_string(f.size()));

    RatingRecord rec;
    rec.snippet_id = f[0];
    rec.rater_id = f[1];
    if (rec.snippet_id.empty() || rec.rater_id.empty())
      throw Error(Errc::MalformedRow, where + "empty snippet_id or rater_id");

    std::size_t used = 0;
    int rating = 0;
    try {
      rating = std::stoi(f[2], &used);
    } catch (const std::exception &) {
      throw Error(Errc::MalformedRow, where + "rating is not an integer");
    }
    if (used != f[2].size())
      throw Error(Errc::MalformedRow, where + "rating is not an integer");
    if (rating < 1 || rating > 10)
      throw Error(Errc::RatingOutOfRange,
                  where + "rating " + std::to_string(rating) +
                      " outside [1,10]");
    rec.rating = rating;

    if (f[3] == "0-3")
      rec.experience = ExperienceBand::Years0To3;
    else if (f[3] == "3-5")
      rec.experience = ExperienceBand::Years3To5;
    else if (f[3] == "5+")
      rec.experience = ExperienceBand::Years5Plus;
    else if (!f[3].empty())
      throw Error(Errc::MalformedRow,
                  where + "experience_band must be 0-3, 3-5, 5+ or empty");

    if (f[4] == "true")
      rec.knows_r = true;
    else if (f[4] == "false")
      rec.knows_r = false;
    else if (!f[4].empty())
      throw Error(Errc::MalformedRow,
                  where + "knows_r must be true, false or empty");

    if (!ds.snippets.count(rec.snippet_id)) {
      std::filesystem::path p =
          detail::resolve_snippet(snippets_dir, rec.snippet_id);
      if (p.empty())
        throw Error(Errc::UnknownSnippet,
                    where + "no snippet file for id \"" + rec.snippet_id +
                        "\" under " + snippets_dir.string());
      ds.snippets.emplace(rec.snippet_id, SourceFile::load(p));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

/// Quantile by linear interpolation between order statistics at position
/// p * (n - 1) of the sorted sample.
inline double quantile_sorted(const std::vector<double> &sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1)
    return sorted[0];
  double pos = p * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1)
    return sorted[n - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct OutlierResult {
  RatingsDataset kept;
  std::vector<RatingRecord> removed;
};

/// Removes, per snippet, ratings strictly beyond the Tukey fences
/// Q1 - 1.5*IQR and Q3 + 1.5*IQR. Fences come from the original ratings
/// (single pass, no iteration); a rating exactly on a fence survives.
inline OutlierResult remove_outliers(const RatingsDataset &ds) {
  std::map<std::string, std::vector<double>> per_snippet;
  for (const RatingRecord &r : ds.records)
    per_snippet[r.snippet_id].push_back(static_cast<double>(r.rating));

  std::map<std::string, std::pair<double, double>> fences;
  for (auto &[id, ratings] : per_snippet) {
    std::sort(ratings.begin(), ratings.end());
    double q1 = quantile_sorted(ratings, 0.25);
    double q3 = quantile_sorted(ratings, 0.75);
    double iqr = q3 - q1;
    fences[id] = {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
  }

  OutlierResult result;
  result.kept.snippets = ds.snippets;
  for (const RatingRecord &r : ds.records) {
    auto [lo, hi] = fences[r.snippet_id];
    if (static_cast<double>(r.rating) < lo || static_cast<double>(r.rating) > hi)
      result.removed.push_back(r);
    else
      result.kept.records.push_back(r);
  }
  return result;
}

/// Mean surviving rating per snippet. Snippets present in the dataset but
/// with no remaining ratings are dropped with a warning.
inline std::map<std::string, double>
aggregate_targets(const RatingsDataset &ds,
                  std::vector<std::string> *warnings = nullptr) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const RatingRecord &r : ds.records) {
    auto &[sum, count] = acc[r.snippet_id];
    sum += static_cast<double>(r.rating);
    ++count;
  }
  std::map<std::string, double> targets;
  for (const auto &[id, _] : ds.snippets) {
    auto it = acc.find(id);
    if (it == acc.end()) {
      if (warnings)
        warnings->push_back("snippet \"" + id +
                            "\" has no ratings left; excluded from targets");
      continue;
    }
    targets[id] = it->second.first / static_cast<double>(it->second.second);
  }
  return targets;
}

} // namespace re3
