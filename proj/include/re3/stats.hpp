#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "re3/common.hpp"
#include "re3/features.hpp"
#include "re3/ratings.hpp"
#include "re3/rng.hpp"

namespace re3 {

/// Pearson correlation coefficient, or nullopt when either argument has
/// zero variance (correlation undefined).
inline std::optional<double> pearson(std::span<const double> x,
                                     std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
    return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// Average ranks (ties share the mean of the ranks they occupy), 1-based.
inline std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]])
      ++j;
    double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

/// Spearman's rho: Pearson on average ranks.
inline std::optional<double> spearman(std::span<const double> x,
                                      std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    return std::nullopt;
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Kendall's tau-b with tie correction.
inline std::optional<double> kendall_tau_b(std::span<const double> x,
                                           std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
    return std::nullopt;
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = x[i] - x[j];
      double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0)
        continue; // tied in both, excluded from every term
      if (dx == 0.0)
        ++ties_x;
      else if (dy == 0.0)
        ++ties_y;
      else if ((dx > 0.0) == (dy > 0.0))
        ++concordant;
      else
        ++discordant;
    }
  }
  double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
  long long tx_pairs = 0, ty_pairs = 0;
  {
    // tied-group pair counts for the denominator
    std::vector<double> sx(x.begin(), x.end()), sy(y.begin(), y.end());
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    auto tied_pairs = [](const std::vector<double> &v) {
      long long total = 0;
      std::size_t i = 0;
      while (i < v.size()) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[i])
          ++j;
        long long g = static_cast<long long>(j - i + 1);
        total += g * (g - 1) / 2;
        i = j + 1;
      }
      return total;
    };
    tx_pairs = tied_pairs(sx);
    ty_pairs = tied_pairs(sy);
  }
  double denom = std::sqrt((n0 - static_cast<double>(tx_pairs)) *
                           (n0 - static_cast<double>(ty_pairs)));
  if (denom <= 0.0)
    return std::nullopt;
  return static_cast<double>(concordant - discordant) / denom;
}

enum class CorrelationMethod { Pearson, Spearman, Kendall };

inline std::optional<double> correlate(CorrelationMethod m,
                                       std::span<const double> x,
                                       std::span<const double> y) {
  switch (m) {
  case CorrelationMethod::Pearson: return pearson(x, y);
  case CorrelationMethod::Spearman: return spearman(x, y);
  case CorrelationMethod::Kendall: return kendall_tau_b(x, y);
  }
  return std::nullopt;
}

/// Two-sided permutation p-value for an observed correlation: the smoothed
/// fraction (count + 1) / (permutations + 1) of shuffles of y whose |stat|
/// reaches |observed|. Always in (0, 1], never exactly 0.
inline double permutation_p_value(CorrelationMethod method,
                                  std::span<const double> x,
                                  std::span<const double> y, double observed,
                                  int permutations, Rng rng) {
  std::vector<double> shuffled(y.begin(), y.end());
  const double target = std::fabs(observed);
  int count = 0;
  for (int p = 0; p < permutations; ++p) {
    rng.shuffle(shuffled);
    std::optional<double> r = correlate(method, x, shuffled);
    if (r && std::fabs(*r) >= target)
      ++count;
  }
  return (static_cast<double>(count) + 1.0) /
         (static_cast<double>(permutations) + 1.0);
}

struct FeatureImportanceEntry {
  std::string feature;
  double pearson_r = 0.0;
  double p_value = 1.0;
  bool zero_variance = false;
};

struct ImportanceConfig {
  int permutations = 10000;
  std::uint64_t seed = 42;
};

/// Per-feature Pearson correlation against the target plus a seeded
/// permutation p-value. Constant features report r = 0, p = 1. Each
/// feature's shuffle stream derives from (seed, feature index) so features
/// may be evaluated in parallel without changing results.
inline std::vector<FeatureImportanceEntry>
feature_importance(const std::vector<FeatureVector> &xs,
                   const std::vector<double> &y, const ImportanceConfig &cfg) {
  if (xs.size() < 3 || xs.size() != y.size())
    throw Error(Errc::TooFewSamples,
                "feature importance needs at least 3 samples");
  std::vector<FeatureImportanceEntry> out;
  out.reserve(kFeatureCount);
  for (int fi = 0; fi < kFeatureCount; ++fi) {
    std::vector<double> column(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      column[i] = xs[i].values[static_cast<std::size_t>(fi)];
    FeatureImportanceEntry e;
    e.feature = feature_names()[static_cast<std::size_t>(fi)];
    std::optional<double> r = pearson(column, y);
    if (!r) {
      e.zero_variance = true; // r stays 0, p stays 1
    } else {
      e.pearson_r = *r;
      e.p_value = permutation_p_value(
          CorrelationMethod::Pearson, column, y, *r, cfg.permutations,
          Rng(cfg.seed, static_cast<std::uint64_t>(fi)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct AgreementConfig {
  int permutations = 1000;
  std::uint64_t seed = 42;
  int min_snippets = 3; // raters with fewer rated snippets are skipped
};

struct AgreementResult {
  double mean_corr = 0.0;
  double mean_p = 0.0;
  int raters_used = 0;
  int raters_skipped = 0;
};

/// Mean model-rater agreement: for each rater with enough rated snippets
/// among `predictions`, the chosen correlation of model scores vs that
/// rater's ratings; the result is the unweighted mean over raters.
/// Raters whose ratings or matched predictions are constant are skipped
/// (degenerate correlation).
inline AgreementResult agreement(const std::map<std::string, double> &predictions,
                                 const RatingsDataset &ds,
                                 CorrelationMethod method,
                                 const AgreementConfig &cfg = {}) {
  std::map<std::string, std::vector<std::pair<double, double>>> by_rater;
  for (const RatingRecord &r : ds.records) {
    auto it = predictions.find(r.snippet_id);
    if (it == predictions.end())
      continue;
    by_rater[r.rater_id].emplace_back(it->second,
                                      static_cast<double>(r.rating));
  }

  AgreementResult res;
  double corr_sum = 0.0, p_sum = 0.0;
  std::uint64_t rater_stream = 0;
  for (const auto &[rater, pairs] : by_rater) {
    ++rater_stream;
    if (pairs.size() < static_cast<std::size_t>(cfg.min_snippets)) {
      ++res.raters_skipped;
      continue;
    }
    std::vector<double> scores, ratings;
    scores.reserve(pairs.size());
    ratings.reserve(pairs.size());
    for (auto [s, r] : pairs) {
      scores.push_back(s);
      ratings.push_back(r);
    }
    std::optional<double> corr = correlate(method, scores, ratings);
    if (!corr) {
      ++res.raters_skipped;
      continue;
    }
    corr_sum += *corr;
    p_sum += permutation_p_value(method, scores, ratings, *corr,
                                 cfg.permutations, Rng(cfg.seed, rater_stream));
    ++res.raters_used;
  }
  if (res.raters_used == 0)
    throw Error(Errc::NoEligibleRaters,
                "no rater has enough rated snippets for agreement statistics");
  res.mean_corr = corr_sum / static_cast<double>(res.raters_used);
  res.mean_p = p_sum / static_cast<double>(res.raters_used);
  return res;
}

} // namespace re3
