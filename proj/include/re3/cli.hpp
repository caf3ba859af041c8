#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "re3/common.hpp"
#include "re3/container.hpp"
#include "re3/corpus.hpp"
#include "re3/depscan.hpp"
#include "re3/features.hpp"
#include "re3/lexer.hpp"
#include "re3/manifest.hpp"
#include "re3/model.hpp"
#include "re3/ratings.hpp"
#include "re3/stats.hpp"

namespace re3::cli {

namespace detail {

inline ordered_json features_json(const FeatureVector &f) {
  ordered_json j;
  for (int i = 0; i < kFeatureCount; ++i)
    j[feature_names()[static_cast<std::size_t>(i)]] =
        f.values[static_cast<std::size_t>(i)];
  j["line_count"] = f.line_count;
  return j;
}

inline ordered_json finding_json(const StaticFinding &f) {
  ordered_json j;
  j["kind"] = std::string(finding_kind_name(f.kind));
  j["file"] = f.file;
  j["line"] = f.line;
  j["excerpt"] = f.excerpt;
  j["severity"] = f.severity == Severity::Error ? "error" : "warn";
  return j;
}

inline ordered_json report_json(const ExecutionReport &r) {
  ordered_json j;
  j["overall"] = r.success ? "success" : "error";
  j["per_file"] = ordered_json::array();
  for (const FileRun &f : r.per_file) {
    ordered_json e;
    e["path"] = f.path;
    if (f.skipped) {
      e["skipped"] = true;
    } else {
      e["exit_code"] = *f.exit_code;
      e["duration_s"] = f.duration_s;
      e["stdout_tail"] = f.stdout_tail;
      e["stderr_tail"] = f.stderr_tail;
    }
    j["per_file"].push_back(std::move(e));
  }
  j["artifacts"] = ordered_json::array();
  for (const Artifact &a : r.artifacts)
    j["artifacts"].push_back({{"path", a.path}, {"size_bytes", a.size_bytes}});
  j["build_log_tail"] = r.build_log_tail;
  return j;
}

inline ordered_json distribution_json(const DistributionReport &rep,
                                      const CorpusResult &corpus) {
  ordered_json j;
  j["bin_width"] = rep.bin_width;
  j["groups"] = ordered_json::array();
  for (const GroupStats &g : rep.groups) {
    ordered_json e;
    e["group"] = g.group;
    e["count"] = g.count;
    e["mean"] = g.mean;
    e["median"] = g.median;
    e["min"] = g.min;
    e["max"] = g.max;
    e["histogram"] = g.histogram;
    j["groups"].push_back(std::move(e));
  }
  j["skipped"] = ordered_json::array();
  for (const SkippedFile &s : corpus.skipped)
    j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
  return j;
}

inline ordered_json manifest_json(const Manifest &m) {
  ordered_json j;
  j["author"] = m.author;
  j["title"] = m.title;
  j["r_version"] = m.r_version;
  j["code_license"] = m.code_license;
  j["data_license"] = m.data_license;
  j["keywords"] = m.keywords;
  j["execution_order"] = m.execution_order;
  j["data_files"] = m.data_files;
  j["on_error"] = m.on_error;
  j["created_at"] = m.created_at;
  return j;
}

struct OutputOptions {
  bool json = false;
  bool quiet = false;
  bool color = false;
};

inline void print_warnings(const std::vector<std::string> &warnings,
                           const OutputOptions &opt, std::ostream &err) {
  if (opt.quiet)
    return;
  for (const std::string &w : warnings)
    err << "warning: " << w << "\n";
}

inline std::string colored_score(double score, const OutputOptions &opt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", score);
  if (!opt.color)
    return buf;
  const char *code = score <= 5.0 ? "\033[31m" : (score > 7.0 ? "\033[32m" : "\033[33m");
  return std::string(code) + buf + "\033[0m";
}

} // namespace detail

/// Parses argv (excluding the program name) and runs one subcommand.
/// Returns the process exit code: 0 success, 1 validation/static errors,
/// 2 build failure, 3 execution failure, 4 environment missing, 64 usage.
inline int dispatch(const std::vector<std::string> &args, std::ostream &out,
                    std::ostream &err) {
  CLI::App app{"re3 - R readability scoring and replication-package checks"};
  app.require_subcommand(1);

  detail::OutputOptions opt;
  opt.color = (&out == &std::cout) && ::isatty(STDOUT_FILENO);
  std::uint64_t global_seed = 42;
  app.add_flag("--json", opt.json, "machine-readable JSON on stdout");
  app.add_flag("--quiet", opt.quiet, "suppress warnings");
  auto *global_seed_opt =
      app.add_option("--seed", global_seed, "seed for seeded subcommands");

  // features FILE [--json] [--debug-tokens]
  std::string features_file;
  bool debug_tokens = false;
  auto *cmd_features =
      app.add_subcommand("features", "extract the 22-feature vector");
  cmd_features->add_option("file", features_file, "R source file")->required();
  cmd_features->add_flag("--debug-tokens", debug_tokens,
                         "dump the token stream as JSON records");

  // train --ratings CSV --snippets DIR --out model.json --seed N
  std::string train_ratings, train_snippets, train_out;
  TrainConfig train_cfg;
  auto *cmd_train = app.add_subcommand("train", "train a readability model");
  cmd_train->add_option("--ratings", train_ratings, "ratings CSV")->required();
  cmd_train->add_option("--snippets", train_snippets, "snippet directory")
      ->required();
  cmd_train->add_option("--out", train_out, "output model file")->required();
  auto *train_seed_opt =
      cmd_train->add_option("--seed", train_cfg.seed, "split seed");
  cmd_train->add_option("--split", train_cfg.split, "training fraction")
      ->check(CLI::Range(0.01, 0.99));
  cmd_train->add_option("--folds", train_cfg.folds, "CV fold count")
      ->check(CLI::Range(2, 100));
  cmd_train->add_option("--ridge", train_cfg.ridge, "ridge lambda");

  // score FILE --model M [--json]
  std::string score_file, score_model;
  auto *cmd_score = app.add_subcommand("score", "score one file");
  cmd_score->add_option("file", score_file, "R source file")->required();
  cmd_score->add_option("--model", score_model, "model file")->required();

  // suggest FILE --model M
  std::string suggest_file, suggest_model;
  auto *cmd_suggest =
      app.add_subcommand("suggest", "readability improvement hints");
  cmd_suggest->add_option("file", suggest_file, "R source file")->required();
  cmd_suggest->add_option("--model", suggest_model, "model file")->required();

  // importance --ratings CSV --snippets DIR --seed N
  std::string imp_ratings, imp_snippets;
  ImportanceConfig imp_cfg;
  auto *cmd_importance =
      app.add_subcommand("importance", "feature predictive power");
  cmd_importance->add_option("--ratings", imp_ratings, "ratings CSV")
      ->required();
  cmd_importance->add_option("--snippets", imp_snippets, "snippet directory")
      ->required();
  auto *imp_seed_opt =
      cmd_importance->add_option("--seed", imp_cfg.seed, "permutation seed");
  cmd_importance->add_option("--permutations", imp_cfg.permutations,
                             "permutation count")
      ->check(CLI::Range(10, 10000000));

  // manifest init|validate DIR
  auto *cmd_manifest = app.add_subcommand("manifest", "package manifests");
  cmd_manifest->require_subcommand(1);
  std::string manifest_dir;
  bool manifest_force = false;
  auto *cmd_manifest_init =
      cmd_manifest->add_subcommand("init", "write a starter manifest.json");
  cmd_manifest_init->add_option("dir", manifest_dir, "package directory")
      ->required();
  cmd_manifest_init->add_flag("--force", manifest_force,
                              "overwrite an existing manifest");
  auto *cmd_manifest_validate =
      cmd_manifest->add_subcommand("validate", "validate manifest.json");
  cmd_manifest_validate->add_option("dir", manifest_dir, "package directory")
      ->required();

  // deps DIR [--json]
  std::string deps_dir;
  auto *cmd_deps = app.add_subcommand("deps", "scan R package dependencies");
  cmd_deps->add_option("dir", deps_dir, "package directory")->required();

  // check DIR [--json]
  std::string check_dir;
  auto *cmd_check =
      app.add_subcommand("check", "static reproducibility checks");
  cmd_check->add_option("dir", check_dir, "package directory")->required();

  // containerize DIR --out Dockerfile
  std::string containerize_dir, containerize_out;
  auto *cmd_containerize =
      app.add_subcommand("containerize", "generate Dockerfile + runner");
  cmd_containerize->add_option("dir", containerize_dir, "package directory")
      ->required();
  cmd_containerize->add_option("--out", containerize_out,
                               "output Dockerfile path (default DIR/Dockerfile)");

  // run DIR [--runtime PATH] [--timeout N] [--keep-going]
  std::string run_dir, run_runtime = "docker";
  int run_timeout = 3600;
  bool run_keep_going = false;
  auto *cmd_run = app.add_subcommand("run", "build and execute the package");
  cmd_run->add_option("dir", run_dir, "package directory")->required();
  cmd_run->add_option("--runtime", run_runtime,
                      "container runtime executable (env RE3_RUNTIME overrides)");
  cmd_run->add_option("--timeout", run_timeout, "per-file timeout, seconds")
      ->check(CLI::PositiveNumber);
  cmd_run->add_flag("--keep-going", run_keep_going,
                    "continue after a failing file");

  // corpus DIR --model M --report R.json [--csv R.csv] [--bin-width W]
  std::string corpus_dir, corpus_model, corpus_report, corpus_csv;
  double corpus_bin_width = 0.5;
  auto *cmd_corpus =
      app.add_subcommand("corpus", "batch-score a directory of R files");
  cmd_corpus->add_option("dir", corpus_dir, "corpus directory")->required();
  cmd_corpus->add_option("--model", corpus_model, "model file")->required();
  cmd_corpus->add_option("--report", corpus_report, "report JSON output path")
      ->required();
  cmd_corpus->add_option("--csv", corpus_csv, "per-file CSV output path");
  cmd_corpus->add_option("--bin-width", corpus_bin_width, "histogram bin width");

  // global flags (--json, --quiet, --seed) are accepted after the
  // subcommand as well
  auto all = app.get_subcommands([](CLI::App *) { return true; });
  for (CLI::App *sub : all) {
    sub->fallthrough();
    for (CLI::App *nested : sub->get_subcommands([](CLI::App *) { return true; }))
      nested->fallthrough();
  }

  std::vector<const char *> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("re3");
  for (const std::string &a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return 64;
  }

  try {
    if (*cmd_features) {
      SourceFile src = SourceFile::load(features_file);
      LexResult lex = tokenize(src);
      for (const LexWarning &w : lex.warnings)
        if (!opt.quiet)
          err << "warning: " << features_file << ":" << (w.line + 1) << ": "
              << w.message << "\n";
      if (debug_tokens) {
        ordered_json toks = ordered_json::array();
        for (const Token &t : lex.tokens)
          toks.push_back({{"kind", std::string(token_kind_name(t.kind))},
                          {"text", t.text},
                          {"line", t.line},
                          {"col", t.col}});
        out << toks.dump(2) << "\n";
        return 0;
      }
      FeatureVector f = aggregate_features(extract_line_metrics(lex.tokens, src));
      if (opt.json) {
        out << detail::features_json(f).dump(2) << "\n";
      } else {
        for (int i = 0; i < kFeatureCount; ++i) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%-16s %.6f",
                        feature_names()[static_cast<std::size_t>(i)].c_str(),
                        f.values[static_cast<std::size_t>(i)]);
          out << buf << "\n";
        }
        out << "line_count       " << f.line_count << "\n";
      }
      return 0;
    }

    if (*cmd_train) {
      if (!*train_seed_opt && *global_seed_opt)
        train_cfg.seed = global_seed;
      TrainPipelineResult r =
          train_from_ratings(train_ratings, train_snippets, train_cfg);
      detail::print_warnings(r.warnings, opt, err);
      save_model(r.model, train_out);
      ordered_json j;
      j["model_path"] = train_out;
      j["n_snippets"] = r.model.metadata.n_snippets;
      j["train_mse"] = r.report.train_mse;
      j["test_mse"] = r.report.test_mse;
      j["cv_fold_mses"] = r.report.cv_fold_mses;
      j["cv_mean_mse"] = r.model.metadata.cv_mean_mse;
      j["n_outliers_removed"] = r.report.n_outliers_removed;
      j["outlier_fraction"] = r.report.outlier_fraction;
      j["split_seed"] = r.report.split_seed;
      j["classification_accuracy"] = r.report.classification_accuracy;
      if (opt.json) {
        out << j.dump(2) << "\n";
      } else {
        out << "trained on " << r.model.metadata.n_snippets << " snippets ("
            << r.report.n_outliers_removed << " outlier ratings removed)\n"
            << "train MSE " << r.report.train_mse << ", test MSE "
            << r.report.test_mse << ", CV mean MSE "
            << r.model.metadata.cv_mean_mse << "\n"
            << "threshold-5 accuracy " << r.report.classification_accuracy
            << "\n"
            << "model written to " << train_out << "\n";
      }
      return 0;
    }

    if (*cmd_score) {
      SourceFile src = SourceFile::load(score_file);
      ReadabilityModel model = load_model(score_model);
      FeatureVector f = extract_features(src);
      double s = predict(model, f);
      ReadabilityLabel label = classify(s);
      std::vector<Suggestion> hints = suggest(f, model);
      if (opt.json) {
        ordered_json j;
        j["score"] = s;
        j["label"] = std::string(label_name(label));
        j["features"] = detail::features_json(f);
        j["suggestions"] = ordered_json::array();
        for (const Suggestion &h : hints)
          j["suggestions"].push_back({{"feature", h.feature},
                                      {"message", h.message},
                                      {"severity", h.severity}});
        out << j.dump(2) << "\n";
      } else {
        out << score_file << ": " << detail::colored_score(s, opt) << " ("
            << label_name(label) << ")\n";
        for (const Suggestion &h : hints)
          out << "  - " << h.message << "\n";
      }
      return 0;
    }

    if (*cmd_suggest) {
      ReadabilityModel model = load_model(suggest_model);
      FeatureVector f = extract_features(SourceFile::load(suggest_file));
      std::vector<Suggestion> hints = suggest(f, model);
      if (opt.json) {
        ordered_json j = ordered_json::array();
        for (const Suggestion &h : hints)
          j.push_back({{"feature", h.feature},
                       {"message", h.message},
                       {"severity", h.severity}});
        out << j.dump(2) << "\n";
      } else if (hints.empty()) {
        out << "no suggestions\n";
      } else {
        for (const Suggestion &h : hints)
          out << "[" << h.severity << "] " << h.feature << ": " << h.message
              << "\n";
      }
      return 0;
    }

    if (*cmd_importance) {
      if (!*imp_seed_opt && *global_seed_opt)
        imp_cfg.seed = global_seed;
      RatingsDataset ds = load_ratings(imp_ratings, imp_snippets);
      OutlierResult cleaned = remove_outliers(ds);
      std::vector<std::string> warnings;
      std::map<std::string, double> targets =
          aggregate_targets(cleaned.kept, &warnings);
      detail::print_warnings(warnings, opt, err);
      std::vector<FeatureVector> xs;
      std::vector<double> y;
      for (const auto &[id, target] : targets) {
        xs.push_back(extract_features(cleaned.kept.snippets.at(id)));
        y.push_back(target);
      }
      std::vector<FeatureImportanceEntry> entries =
          feature_importance(xs, y, imp_cfg);
      std::sort(entries.begin(), entries.end(),
                [](const auto &a, const auto &b) {
                  double ma = std::fabs(a.pearson_r), mb = std::fabs(b.pearson_r);
                  if (ma != mb)
                    return ma > mb;
                  return a.feature < b.feature;
                });
      if (opt.json) {
        ordered_json j = ordered_json::array();
        for (const auto &e : entries)
          j.push_back({{"feature", e.feature},
                       {"pearson_r", e.pearson_r},
                       {"p_value", e.p_value}});
        out << j.dump(2) << "\n";
      } else {
        for (const auto &e : entries) {
          char buf[96];
          std::snprintf(buf, sizeof(buf), "%-16s r=%+.4f  p=%.6f",
                        e.feature.c_str(), e.pearson_r, e.p_value);
          out << buf << "\n";
        }
      }
      return 0;
    }

    if (*cmd_manifest_init) {
      std::filesystem::path written = init_manifest(manifest_dir, manifest_force);
      if (opt.json)
        out << ordered_json{{"manifest", written.string()}}.dump(2) << "\n";
      else
        out << "wrote " << written.string() << "\n";
      return 0;
    }

    if (*cmd_manifest_validate) {
      Manifest m = validate_manifest(std::filesystem::path(manifest_dir) /
                                     "manifest.json");
      if (opt.json) {
        ordered_json j;
        j["valid"] = true;
        j["manifest"] = detail::manifest_json(m);
        out << j.dump(2) << "\n";
      } else {
        out << "manifest OK: " << m.execution_order.size()
            << " code file(s), R " << m.r_version << "\n";
      }
      return 0;
    }

    if (*cmd_deps) {
      Manifest m =
          validate_manifest(std::filesystem::path(deps_dir) / "manifest.json");
      std::vector<SourceFile> files;
      for (const std::string &rel : m.execution_order)
        files.push_back(SourceFile::load(m.root / rel));
      // provenance keyed by package-relative path
      for (SourceFile &f : files)
        f.path = std::filesystem::relative(f.path, m.root).generic_string();
      DependencyReport report = scan_dependencies(files);
      if (opt.json) {
        ordered_json j;
        j["packages"] = report.packages;
        j["provenance"] = ordered_json::object();
        for (const auto &[file, uses] : report.provenance) {
          ordered_json list = ordered_json::array();
          for (const auto &[pkg, line] : uses)
            list.push_back({{"package", pkg}, {"line", line}});
          j["provenance"][file] = std::move(list);
        }
        out << j.dump(2) << "\n";
      } else if (report.packages.empty()) {
        out << "no external package dependencies detected\n";
      } else {
        for (const std::string &pkg : report.packages)
          out << pkg << "\n";
      }
      return 0;
    }

    if (*cmd_check) {
      Manifest m =
          validate_manifest(std::filesystem::path(check_dir) / "manifest.json");
      std::vector<SourceFile> files;
      for (const std::string &rel : m.execution_order) {
        SourceFile f = SourceFile::load(m.root / rel);
        f.path = rel;
        files.push_back(std::move(f));
      }
      std::vector<StaticFinding> findings = static_checks(files, m);
      bool any_error = false;
      if (opt.json) {
        ordered_json j = ordered_json::array();
        for (const StaticFinding &f : findings)
          j.push_back(detail::finding_json(f));
        out << j.dump(2) << "\n";
      } else if (findings.empty()) {
        out << "no findings\n";
      }
      for (const StaticFinding &f : findings) {
        if (f.severity == Severity::Error)
          any_error = true;
        if (!opt.json)
          out << f.file << ":" << f.line << ": ["
              << finding_kind_name(f.kind) << "] "
              << (f.severity == Severity::Error ? "error" : "warn") << ": "
              << f.excerpt << "\n";
      }
      return any_error ? 1 : 0;
    }

    if (*cmd_containerize) {
      std::filesystem::path dir(containerize_dir);
      Manifest m = validate_manifest(dir / "manifest.json");
      std::vector<SourceFile> files;
      for (const std::string &rel : m.execution_order)
        files.push_back(SourceFile::load(m.root / rel));
      ContainerSpec spec = generate_container_spec(m, scan_dependencies(files));
      std::filesystem::path out_path =
          containerize_out.empty() ? dir / "Dockerfile"
                                   : std::filesystem::path(containerize_out);
      std::filesystem::path runner_path =
          out_path.parent_path().empty()
              ? std::filesystem::path("re3_run.sh")
              : out_path.parent_path() / "re3_run.sh";
      write_file(out_path, spec.dockerfile_text);
      write_file(runner_path, spec.runner_script_text);
      if (opt.json) {
        ordered_json j;
        j["dockerfile"] = out_path.string();
        j["runner"] = runner_path.string();
        j["image_tag"] = spec.image_tag;
        out << j.dump(2) << "\n";
      } else {
        out << "wrote " << out_path.string() << " and " << runner_path.string()
            << " (image tag " << spec.image_tag << ")\n";
      }
      return 0;
    }

    if (*cmd_run) {
      std::filesystem::path dir(run_dir);
      Manifest m = validate_manifest(dir / "manifest.json");
      if (run_keep_going)
        m.on_error = "keep_going";
      std::vector<SourceFile> files;
      for (const std::string &rel : m.execution_order) {
        SourceFile f = SourceFile::load(m.root / rel);
        f.path = rel;
        files.push_back(std::move(f));
      }
      std::vector<StaticFinding> findings = static_checks(files, m);
      if (!opt.quiet)
        for (const StaticFinding &f : findings)
          err << "finding: " << f.file << ":" << f.line << ": ["
              << finding_kind_name(f.kind) << "] " << f.excerpt << "\n";
      ContainerSpec spec = generate_container_spec(m, scan_dependencies(files));
      ExecuteConfig ecfg;
      if (const char *env_runtime = std::getenv("RE3_RUNTIME"))
        ecfg.runtime_path = env_runtime;
      else
        ecfg.runtime_path = run_runtime;
      ecfg.per_file_timeout_s = run_timeout;
      ecfg.workdir = dir;
      ExecutionReport report = execute(spec, m.execution_order, ecfg);
      if (opt.json) {
        out << detail::report_json(report).dump(2) << "\n";
      } else {
        for (const FileRun &f : report.per_file) {
          if (f.skipped)
            out << "skip " << f.path << "\n";
          else if (*f.exit_code == 0)
            out << "ok   " << f.path << " (" << f.duration_s << "s)\n";
          else
            out << "FAIL " << f.path << " (exit " << *f.exit_code << ")\n";
        }
        out << "overall: " << (report.success ? "success" : "error") << "\n";
        for (const Artifact &a : report.artifacts)
          out << "artifact: " << a.path << " (" << a.size_bytes << " bytes)\n";
      }
      return report.success ? 0 : 3;
    }

    if (*cmd_corpus) {
      ReadabilityModel model = load_model(corpus_model);
      CorpusResult corpus = score_corpus(corpus_dir, model);
      DistributionReport rep =
          distribution_report(corpus.records, corpus_bin_width);
      ordered_json j = detail::distribution_json(rep, corpus);
      write_file(corpus_report, j.dump(2) + "\n");
      if (!corpus_csv.empty()) {
        std::string csv = "path,group,score,line_count\n";
        for (const CorpusRecord &r : corpus.records) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f", r.score);
          csv += r.path + "," + r.group + "," + buf + "," +
                 std::to_string(r.line_count) + "\n";
        }
        write_file(corpus_csv, csv);
      }
      if (opt.json) {
        out << j.dump(2) << "\n";
      } else {
        out << corpus.records.size() << " file(s) scored, "
            << corpus.skipped.size() << " skipped\n";
        for (const GroupStats &g : rep.groups) {
          char buf[128];
          std::snprintf(buf, sizeof(buf),
                        "%-12s n=%-5d mean=%.2f median=%.2f range=[%.2f, %.2f]",
                        g.group.c_str(), g.count, g.mean, g.median, g.min,
                        g.max);
          out << buf << "\n";
        }
        if (!opt.quiet)
          for (const SkippedFile &s : corpus.skipped)
            err << "skipped: " << s.path << " (" << s.reason << ")\n";
      }
      return 0;
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}

} // namespace re3::cli
