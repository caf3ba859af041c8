#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "re3/common.hpp"
#include "re3/features.hpp"
#include "re3/linalg.hpp"
#include "re3/ratings.hpp"
#include "re3/rng.hpp"

namespace re3 {

using ordered_json = nlohmann::ordered_json;

/// Linear readability model over the canonical 22 features: score =
/// clamp(bias + sum_i w_i * (f_i - mean_i) / std_i, 1, 10). Immutable once
/// trained; safe to share across scoring threads.
struct ReadabilityModel {
  std::vector<std::string> feature_order; // must equal feature_names()
  std::vector<double> means;
  std::vector<double> stds; // 1.0 for zero-variance features (weight 0)
  std::vector<double> weights;
  double bias = 0.0;
  double score_min = 1.0;
  double score_max = 10.0;

  struct Metadata {
    std::string trained_at; // from SOURCE_DATE_EPOCH, else empty
    std::uint64_t seed = 0;
    int n_snippets = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double cv_mean_mse = 0.0;
  } metadata;
};

struct TrainConfig {
  std::uint64_t seed = 42;
  double split = 0.8;
  int folds = 10;
  double ridge = 1e-8;
};

struct TrainReport {
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::vector<double> cv_fold_mses;
  int n_outliers_removed = 0;
  double outlier_fraction = 0.0;
  std::uint64_t split_seed = 0;
  double classification_accuracy = 0.0;
};

enum class ReadabilityLabel { Readable, NotReadable };

/// Threshold-5 binary label: a score of 5 or below is not readable.
inline ReadabilityLabel classify(double score) {
  return score <= 5.0 ? ReadabilityLabel::NotReadable
                      : ReadabilityLabel::Readable;
}

inline std::string_view label_name(ReadabilityLabel l) {
  return l == ReadabilityLabel::Readable ? "readable" : "not_readable";
}

namespace detail {

inline void check_canonical_order(const ReadabilityModel &m) {
  const auto &names = feature_names();
  if (m.feature_order.size() != names.size() ||
      !std::equal(names.begin(), names.end(), m.feature_order.begin()))
    throw Error(Errc::ModelFeatureMismatch,
                "model feature order does not match the canonical feature set");
}

/// Fits mean/std (population) per feature and the ridge weights + bias on
/// the given rows by solving the 23x23 normal equations (standardized
/// feature columns plus an intercept column).
struct Fit {
  std::vector<double> means, stds, weights;
  double bias = 0.0;

  static Fit compute(const std::vector<const FeatureVector *> &rows,
                     const std::vector<double> &targets, double ridge) {
    const std::size_t n = rows.size();
    const std::size_t k = kFeatureCount;
    Fit fit;
    fit.means.assign(k, 0.0);
    fit.stds.assign(k, 1.0);
    for (std::size_t j = 0; j < k; ++j) {
      double sum = 0.0;
      for (const FeatureVector *r : rows)
        sum += r->values[j];
      double mean = sum / static_cast<double>(n);
      double var = 0.0;
      for (const FeatureVector *r : rows) {
        double d = r->values[j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      fit.means[j] = mean;
      fit.stds[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    // design matrix: standardized features + intercept column
    const std::size_t d = k + 1;
    std::vector<double> z(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j)
        z[i * d + j] = (rows[i]->values[j] - fit.means[j]) / fit.stds[j];
      z[i * d + k] = 1.0;
    }
    std::vector<double> normal(d * d, 0.0);
    std::vector<double> rhs(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        double za = z[i * d + a];
        rhs[a] += za * targets[i];
        for (std::size_t b = a; b < d; ++b)
          normal[a * d + b] += za * z[i * d + b];
      }
    }
    for (std::size_t a = 0; a < d; ++a) {
      normal[a * d + a] += ridge;
      for (std::size_t b = 0; b < a; ++b)
        normal[a * d + b] = normal[b * d + a];
    }
    std::vector<double> beta = solve_linear_system(std::move(normal), rhs);
    fit.weights.assign(beta.begin(), beta.begin() + static_cast<long>(k));
    fit.bias = beta[k];
    return fit;
  }

  double score(const FeatureVector &f) const {
    double s = bias;
    for (std::size_t j = 0; j < static_cast<std::size_t>(kFeatureCount); ++j)
      s += weights[j] * (f.values[j] - means[j]) / stds[j];
    return s;
  }
};

inline double mse(const Fit &fit, const std::vector<const FeatureVector *> &rows,
                  const std::vector<double> &targets) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double e = fit.score(*rows[i]) - targets[i];
    acc += e * e;
  }
  return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}

inline std::string deterministic_timestamp() {
  // Wall-clock time would break byte-identical retraining, so the
  // timestamp is only recorded when SOURCE_DATE_EPOCH pins it.
  const char *epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch)
    return "";
  char buf[32] = {};
  std::time_t t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  std::tm tm{};
  if (!gmtime_r(&t, &tm))
    return "";
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace detail

/// Unclamped linear score; regression metrics are computed on this.
inline double linear_score(const ReadabilityModel &m, const FeatureVector &f) {
  detail::check_canonical_order(m);
  double s = m.bias;
  for (std::size_t j = 0; j < static_cast<std::size_t>(kFeatureCount); ++j)
    s += m.weights[j] * (f.values[j] - m.means[j]) / m.stds[j];
  return s;
}

/// Readability score clamped to [1, 10].
inline double predict(const ReadabilityModel &m, const FeatureVector &f) {
  return std::clamp(linear_score(m, f), m.score_min, m.score_max);
}

/// Trains the linear model: seeded 80/20 shuffle split, z-scoring with the
/// training split's means/stds, ridge-stabilized normal equations, k-fold
/// cross-validation on the training split, and threshold-5 classification
/// accuracy on the holdout. Deterministic for a fixed seed.
inline std::pair<ReadabilityModel, TrainReport>
train(const std::vector<FeatureVector> &xs, const std::vector<double> &y,
      const TrainConfig &cfg = {}) {
  const std::size_t n = xs.size();
  if (n != y.size() || n < static_cast<std::size_t>(cfg.folds) + 2)
    throw Error(Errc::TooFewSamples,
                "training needs at least folds + 2 samples (" +
                    std::to_string(cfg.folds + 2) + "), got " +
                    std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : xs[i].values)
      if (!std::isfinite(v))
        throw Error(Errc::NonFiniteFeature,
                    "non-finite feature value in sample " + std::to_string(i));
    if (!std::isfinite(y[i]))
      throw Error(Errc::NonFiniteFeature,
                  "non-finite target in sample " + std::to_string(i));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(cfg.seed, 0);
  split_rng.shuffle(order);

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(cfg.split * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  if (n_train < static_cast<std::size_t>(cfg.folds))
    throw Error(Errc::TooFewSamples,
                "training split smaller than the fold count");

  std::vector<const FeatureVector *> train_rows, test_rows;
  std::vector<double> train_y, test_y;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      train_rows.push_back(&xs[order[i]]);
      train_y.push_back(y[order[i]]);
    } else {
      test_rows.push_back(&xs[order[i]]);
      test_y.push_back(y[order[i]]);
    }
  }

  detail::Fit fit = detail::Fit::compute(train_rows, train_y, cfg.ridge);

  TrainReport report;
  report.split_seed = cfg.seed;
  report.train_mse = detail::mse(fit, train_rows, train_y);
  report.test_mse = detail::mse(fit, test_rows, test_y);

  // k-fold CV on the training split, refitting standardization per fold
  std::vector<std::size_t> cv_order(train_rows.size());
  std::iota(cv_order.begin(), cv_order.end(), 0);
  Rng cv_rng(cfg.seed, 1);
  cv_rng.shuffle(cv_order);
  const std::size_t folds = static_cast<std::size_t>(cfg.folds);
  for (std::size_t fold = 0; fold < folds; ++fold) {
    std::vector<const FeatureVector *> fit_rows, holdout_rows;
    std::vector<double> fit_y, holdout_y;
    for (std::size_t i = 0; i < cv_order.size(); ++i) {
      std::size_t idx = cv_order[i];
      if (i % folds == fold) {
        holdout_rows.push_back(train_rows[idx]);
        holdout_y.push_back(train_y[idx]);
      } else {
        fit_rows.push_back(train_rows[idx]);
        fit_y.push_back(train_y[idx]);
      }
    }
    detail::Fit cv_fit = detail::Fit::compute(fit_rows, fit_y, cfg.ridge);
    report.cv_fold_mses.push_back(detail::mse(cv_fit, holdout_rows, holdout_y));
  }

  int correct = 0;
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    double s = std::clamp(fit.score(*test_rows[i]), 1.0, 10.0);
    if ((classify(s) == ReadabilityLabel::Readable) == (test_y[i] > 5.0))
      ++correct;
  }
  report.classification_accuracy =
      test_rows.empty() ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(test_rows.size());

  ReadabilityModel model;
  model.feature_order.assign(feature_names().begin(), feature_names().end());
  model.means = fit.means;
  model.stds = fit.stds;
  model.weights = fit.weights;
  model.bias = fit.bias;
  model.metadata.trained_at = detail::deterministic_timestamp();
  model.metadata.seed = cfg.seed;
  model.metadata.n_snippets = static_cast<int>(n);
  model.metadata.train_mse = report.train_mse;
  model.metadata.test_mse = report.test_mse;
  model.metadata.cv_mean_mse =
      std::accumulate(report.cv_fold_mses.begin(), report.cv_fold_mses.end(),
                      0.0) /
      static_cast<double>(report.cv_fold_mses.size());
  return {std::move(model), std::move(report)};
}

// ---- model file (JSON, version 1) ----

inline ordered_json model_to_json(const ReadabilityModel &m) {
  ordered_json j;
  j["version"] = 1;
  j["feature_order"] = m.feature_order;
  j["means"] = m.means;
  j["stds"] = m.stds;
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["metadata"] = {{"trained_at", m.metadata.trained_at},
                   {"seed", m.metadata.seed},
                   {"n_snippets", m.metadata.n_snippets},
                   {"train_mse", m.metadata.train_mse},
                   {"test_mse", m.metadata.test_mse},
                   {"cv_mean_mse", m.metadata.cv_mean_mse}};
  return j;
}

inline void save_model(const ReadabilityModel &m,
                       const std::filesystem::path &path) {
  write_file(path, model_to_json(m).dump(2) + "\n");
}

inline ReadabilityModel load_model(const std::filesystem::path &path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::BadModelFile,
                path.string() + ": not valid JSON: " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1)
      throw Error(Errc::BadModelFile, path.string() + ": unsupported version");
    ReadabilityModel m;
    m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.stds = j.at("stds").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    if (m.feature_order.size() != kFeatureCount ||
        m.means.size() != kFeatureCount || m.stds.size() != kFeatureCount ||
        m.weights.size() != kFeatureCount)
      throw Error(Errc::BadModelFile,
                  path.string() + ": arrays must have length 22");
    if (j.contains("metadata")) {
      const auto &md = j["metadata"];
      m.metadata.trained_at = md.value("trained_at", "");
      m.metadata.seed = md.value("seed", std::uint64_t{0});
      m.metadata.n_snippets = md.value("n_snippets", 0);
      m.metadata.train_mse = md.value("train_mse", 0.0);
      m.metadata.test_mse = md.value("test_mse", 0.0);
      m.metadata.cv_mean_mse = md.value("cv_mean_mse", 0.0);
    }
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::BadModelFile,
                path.string() + ": malformed model file: " + e.what());
  }
}

// ---- suggestions ----

struct Suggestion {
  std::string feature;
  std::string message;
  std::string severity; // info | minor | major
};

namespace detail {

inline std::string_view feature_phrase(int idx) {
  static const std::array<std::string_view, kFeatureCount> phrases = {
      "arithmetic operators per line",
      "assignments per line",
      "blank-line fraction",
      "branches per line",
      "commas per line",
      "commented-line fraction",
      "comparison operators per line",
      "average indentation",
      "keywords per line",
      "average line length",
      "loops per line",
      "numeric literals per line",
      "parentheses per line",
      "periods per line",
      "spaces per line",
      "variables per line",
      "peak single-character repetition",
      "maximum indentation",
      "maximum keywords on one line",
      "maximum line length",
      "maximum numeric literals on one line",
      "maximum variables on one line"};
  return phrases[static_cast<std::size_t>(idx)];
}

} // namespace detail

/// Feature-level improvement hints: every feature whose weighted
/// standardized contribution costs more than `threshold` score points gets
/// a message, and a missing-comments advisory is always added when the file
/// has no comments at all. Sorted by contribution magnitude, descending.
inline std::vector<Suggestion> suggest(const FeatureVector &f,
                                       const ReadabilityModel &m,
                                       double threshold = -0.25) {
  detail::check_canonical_order(m);
  struct Hit {
    int idx;
    double contribution;
    bool advisory;
  };
  std::vector<Hit> hits;
  bool comments_hit = false;
  for (int j = 0; j < kFeatureCount; ++j) {
    std::size_t ji = static_cast<std::size_t>(j);
    double z = (f.values[ji] - m.means[ji]) / m.stds[ji];
    double contribution = m.weights[ji] * z;
    if (contribution < threshold) {
      hits.push_back({j, contribution, false});
      if (j == static_cast<int>(Feature::AvgComments))
        comments_hit = true;
    }
  }
  if (f[Feature::AvgComments] == 0.0 && !comments_hit) {
    std::size_t ci = static_cast<std::size_t>(Feature::AvgComments);
    double z = (0.0 - m.means[ci]) / m.stds[ci];
    hits.push_back({static_cast<int>(Feature::AvgComments),
                    m.weights[ci] * z, true});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit &a, const Hit &b) {
    double ma = std::fabs(a.contribution), mb = std::fabs(b.contribution);
    if (ma != mb)
      return ma > mb;
    return a.idx < b.idx;
  });

  std::vector<Suggestion> out;
  for (const Hit &h : hits) {
    std::size_t ji = static_cast<std::size_t>(h.idx);
    Suggestion s;
    s.feature = feature_names()[ji];
    if (h.advisory) {
      s.message = "no comments detected; consider documenting the code with "
                  "# comments";
      s.severity = "info";
    } else {
      double z = (f.values[ji] - m.means[ji]) / m.stds[ji];
      bool too_high = z > 0.0;
      std::string direction = too_high ? "reduce" : "increase";
      s.message = direction + " the " + std::string(detail::feature_phrase(h.idx)) +
                  " (costs " + std::to_string(-h.contribution) +
                  " score points)";
      s.severity = h.contribution < -0.75 ? "major" : "minor";
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---- ratings-to-model pipeline ----

struct TrainPipelineResult {
  ReadabilityModel model;
  TrainReport report;
  std::vector<std::string> warnings;
  std::vector<std::string> snippet_ids; // training order (sorted)
  std::vector<FeatureVector> features;  // aligned with snippet_ids
  std::vector<double> targets;          // aligned with snippet_ids
};

/// Full training pipeline: load ratings, drop IQR outliers, average the
/// surviving ratings per snippet, extract features, train.
inline TrainPipelineResult
train_from_ratings(const std::filesystem::path &ratings_csv,
                   const std::filesystem::path &snippets_dir,
                   const TrainConfig &cfg = {}) {
  TrainPipelineResult out;
  RatingsDataset ds = load_ratings(ratings_csv, snippets_dir);
  const std::size_t original = ds.records.size();
  OutlierResult cleaned = remove_outliers(ds);
  std::map<std::string, double> targets =
      aggregate_targets(cleaned.kept, &out.warnings);

  for (const auto &[id, target] : targets) {
    out.snippet_ids.push_back(id);
    out.features.push_back(extract_features(cleaned.kept.snippets.at(id)));
    out.targets.push_back(target);
  }
  auto [model, report] = train(out.features, out.targets, cfg);
  report.n_outliers_removed = static_cast<int>(cleaned.removed.size());
  report.outlier_fraction =
      original == 0 ? 0.0
                    : static_cast<double>(cleaned.removed.size()) /
                          static_cast<double>(original);
  out.model = std::move(model);
  out.report = std::move(report);
  return out;
}

} // namespace re3
