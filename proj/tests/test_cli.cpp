#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>

#include "helpers.hpp"
#include "re3/cli.hpp"

using namespace re3;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

/// Builds a ratings corpus (15 snippets, 3 raters) good enough to train on.
void write_training_data(const test::TempDir &tmp) {
  std::string csv = "snippet_id,rater_id,rating,experience_band,knows_r\n";
  for (int i = 0; i < 15; ++i) {
    std::string id = "s" + std::to_string(i);
    std::string body;
    int width = 4 + i * 5;
    for (int line = 0; line < 6; ++line) {
      std::string stmt = "x" + std::to_string(line) + " <- " +
                         std::to_string(line + i);
      while (static_cast<int>(stmt.size()) < width)
        stmt += " + 1";
      body += stmt + "\n";
    }
    if (i % 3 == 0)
      body += "# documented\n";
    tmp.write("snippets/" + id + ".R", body);
    int base = 9 - (i * 8) / 14; // longer lines rate worse
    csv += id + ",alice," + std::to_string(std::max(1, base)) + ",0-3,true\n";
    csv += id + ",bob," + std::to_string(std::min(10, base + 1)) + ",3-5,\n";
    csv += id + ",carol," + std::to_string(std::max(1, base)) + ",,false\n";
  }
  re3::write_file(tmp.path() / "ratings.csv", csv);
}

} // namespace

TEST_CASE("scoring a missing file exits 1 and names the path", "[cli]") {
  CliResult r = run_cli({"score", "definitely_missing.R", "--model", "m.json"});
  CHECK(r.code == 1);
  CHECK(r.err.find("definitely_missing.R") != std::string::npos);
}

TEST_CASE("train without --ratings is a usage error", "[cli]") {
  CliResult r = run_cli({"train", "--snippets", "x", "--out", "m.json"});
  CHECK(r.code == 64);
}

TEST_CASE("unknown subcommand is a usage error", "[cli]") {
  CliResult r = run_cli({"frobnicate"});
  CHECK(r.code == 64);
}

TEST_CASE("features emits the canonical vector as JSON", "[cli]") {
  test::TempDir tmp;
  auto file = tmp.write("a.R", "x <- 1\n# note\n");
  CliResult r = run_cli({"--json", "features", file.string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out); // single JSON document
  CHECK(j.size() == 23);                 // 22 features + line_count
  CHECK(j["line_count"] == 2);
  CHECK(j["avg_comments"] == 0.5);
  for (const std::string &name : feature_names())
    CHECK(j.contains(name));
}

TEST_CASE("features --debug-tokens dumps line-ordered records", "[cli]") {
  test::TempDir tmp;
  auto file = tmp.write("a.R", "x <- 1\n");
  CliResult r = run_cli({"features", file.string(), "--debug-tokens"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 5); // x, ws, <-, ws, 1
  CHECK(j[0]["kind"] == "Identifier");
  CHECK(j[0]["line"] == 0);
  CHECK(j[0]["col"] == 0);
  CHECK(j[2]["kind"] == "AssignOp");
}

TEST_CASE("train, score and suggest round trip", "[cli]") {
  test::TempDir tmp;
  write_training_data(tmp);
  auto model_path = tmp.path() / "model.json";
  CliResult train = run_cli({"train", "--ratings",
                             (tmp.path() / "ratings.csv").string(),
                             "--snippets", (tmp.path() / "snippets").string(),
                             "--out", model_path.string(), "--seed", "7"});
  REQUIRE(train.code == 0);
  REQUIRE(std::filesystem::exists(model_path));

  auto scored = tmp.write("scored.R", "verylongvariablename <- 1234 + 5678\n");
  // global flags are valid after the subcommand too
  CliResult score = run_cli(
      {"score", scored.string(), "--model", model_path.string(), "--json"});
  REQUIRE(score.code == 0);
  auto j = nlohmann::json::parse(score.out);
  REQUIRE(j.contains("score"));
  double s = j["score"].get<double>();
  CHECK(s >= 1.0);
  CHECK(s <= 10.0);
  CHECK((j["label"] == "readable" || j["label"] == "not_readable"));
  CHECK(j["features"]["line_count"] == 1);
  CHECK(j.contains("suggestions"));

  CliResult suggest = run_cli(
      {"--json", "suggest", scored.string(), "--model", model_path.string()});
  REQUIRE(suggest.code == 0);
  auto hints = nlohmann::json::parse(suggest.out);
  CHECK(hints.is_array());
  // no comments in the scored file, so the advisory must be present
  bool comments_hint = false;
  for (const auto &h : hints)
    if (h["feature"] == "avg_comments")
      comments_hint = true;
  CHECK(comments_hint);
}

TEST_CASE("training twice with one seed is byte-identical", "[cli]") {
  test::TempDir tmp;
  write_training_data(tmp);
  auto m1 = tmp.path() / "m1.json";
  auto m2 = tmp.path() / "m2.json";
  std::vector<std::string> base = {
      "train", "--ratings", (tmp.path() / "ratings.csv").string(),
      "--snippets", (tmp.path() / "snippets").string()};
  auto run1 = base;
  run1.insert(run1.end(), {"--out", m1.string(), "--seed", "11"});
  auto run2 = base;
  run2.insert(run2.end(), {"--out", m2.string(), "--seed", "11"});
  REQUIRE(run_cli(run1).code == 0);
  REQUIRE(run_cli(run2).code == 0);
  CHECK(read_file(m1) == read_file(m2));

  auto m3 = tmp.path() / "m3.json";
  auto run3 = base;
  run3.insert(run3.end(), {"--out", m3.string(), "--seed", "12"});
  REQUIRE(run_cli(run3).code == 0);
  CHECK(read_file(m1) != read_file(m3)); // different split
}

TEST_CASE("importance ranks features", "[cli]") {
  test::TempDir tmp;
  write_training_data(tmp);
  CliResult r = run_cli({"--json", "importance", "--ratings",
                         (tmp.path() / "ratings.csv").string(), "--snippets",
                         (tmp.path() / "snippets").string(), "--seed", "3",
                         "--permutations", "200"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == kFeatureCount);
  // sorted by |r| descending
  double prev = 1e9;
  for (const auto &e : j) {
    double cur = std::fabs(e["pearson_r"].get<double>());
    CHECK(cur <= prev + 1e-12);
    prev = cur;
    CHECK(e["p_value"].get<double>() > 0.0);
    CHECK(e["p_value"].get<double>() <= 1.0);
  }
}

TEST_CASE("manifest/deps/check/containerize flow", "[cli]") {
  test::TempDir tmp;
  tmp.write("pkg/prep.R", "library(dplyr)\nd <- read.csv(\"data/in.csv\")\n");
  tmp.write("pkg/fit.R", "m <- lm(y ~ x)\n");
  tmp.write("pkg/data/in.csv", "x,y\n1,2\n");

  CliResult init = run_cli({"manifest", "init", (tmp.path() / "pkg").string()});
  REQUIRE(init.code == 0);
  CliResult validate =
      run_cli({"manifest", "validate", (tmp.path() / "pkg").string()});
  REQUIRE(validate.code == 0);

  CliResult deps =
      run_cli({"--json", "deps", (tmp.path() / "pkg").string()});
  REQUIRE(deps.code == 0);
  auto dj = nlohmann::json::parse(deps.out);
  CHECK(dj["packages"] == nlohmann::json::array({"dplyr"}));
  REQUIRE(dj["provenance"].contains("prep.R"));
  CHECK(dj["provenance"]["prep.R"][0]["line"] == 1);

  CliResult check =
      run_cli({"--json", "check", (tmp.path() / "pkg").string()});
  CHECK(check.code == 0); // nothing blocking
  CHECK(nlohmann::json::parse(check.out).is_array());

  CliResult containerize =
      run_cli({"containerize", (tmp.path() / "pkg").string()});
  REQUIRE(containerize.code == 0);
  CHECK(std::filesystem::exists(tmp.path() / "pkg" / "Dockerfile"));
  CHECK(std::filesystem::exists(tmp.path() / "pkg" / "re3_run.sh"));
  std::string dockerfile = read_file(tmp.path() / "pkg" / "Dockerfile");
  CHECK(dockerfile.find("r-dplyr") != std::string::npos);

  // determinism across two invocations
  std::string first = dockerfile;
  REQUIRE(run_cli({"containerize", (tmp.path() / "pkg").string()}).code == 0);
  CHECK(read_file(tmp.path() / "pkg" / "Dockerfile") == first);
}

TEST_CASE("check exits 1 when an error-severity finding exists", "[cli]") {
  test::TempDir tmp;
  tmp.write("pkg/a.R", "d <- read.csv(\"nope.csv\")\n");
  test::write_manifest(tmp.path() / "pkg", "3.6", {"a.R"});
  CliResult r = run_cli({"check", (tmp.path() / "pkg").string()});
  CHECK(r.code == 1);
  CHECK(r.out.find("MissingReferencedFile") != std::string::npos);
}

TEST_CASE("run via stub runtime, including RE3_RUNTIME override", "[cli]") {
  test::TempDir tmp;
  tmp.write("pkg/a.R", "x <- 1\n");
  test::write_manifest(tmp.path() / "pkg", "3.6", {"a.R"});
  auto stub = test::write_stub_runtime(tmp.path());

  ::setenv("RE3_RUNTIME", stub.string().c_str(), 1);
  CliResult ok = run_cli({"--json", "run", (tmp.path() / "pkg").string(),
                          "--runtime", "/nonexistent"});
  ::unsetenv("RE3_RUNTIME");
  REQUIRE(ok.code == 0); // env var wins over the bogus flag
  auto j = nlohmann::json::parse(ok.out);
  CHECK(j["overall"] == "success");
  REQUIRE(j["per_file"].size() == 1);
  CHECK(j["per_file"][0]["exit_code"] == 0);

  // execution failure maps to exit 3
  tmp.write("pkg/a.R", "library(missingpkg)\n");
  ::setenv("RE3_STUB_PACKAGES", "utils", 1);
  CliResult fail = run_cli({"run", (tmp.path() / "pkg").string(), "--runtime",
                            stub.string()});
  ::unsetenv("RE3_STUB_PACKAGES");
  CHECK(fail.code == 3);

  // missing runtime maps to exit 4
  CliResult noenv = run_cli({"run", (tmp.path() / "pkg").string(),
                             "--runtime", "/nonexistent/engine"});
  CHECK(noenv.code == 4);
}

TEST_CASE("run --keep-going executes files past a failure", "[cli]") {
  test::TempDir tmp;
  tmp.write("pkg/bad.R", "library(gone)\n");
  tmp.write("pkg/good.R", "x <- 1\n");
  test::write_manifest(tmp.path() / "pkg", "3.6", {"bad.R", "good.R"});
  auto stub = test::write_stub_runtime(tmp.path());
  ::setenv("RE3_STUB_PACKAGES", "utils", 1);
  CliResult r = run_cli({"--json", "run", (tmp.path() / "pkg").string(),
                         "--runtime", stub.string(), "--keep-going"});
  ::unsetenv("RE3_STUB_PACKAGES");
  CHECK(r.code == 3);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["per_file"].size() == 2);
  CHECK(j["per_file"][0]["exit_code"] != 0);
  CHECK(j["per_file"][1]["exit_code"] == 0); // ran despite the failure
}

TEST_CASE("global --seed before the subcommand seeds training", "[cli]") {
  test::TempDir tmp;
  write_training_data(tmp);
  auto m1 = tmp.path() / "m1.json";
  auto m2 = tmp.path() / "m2.json";
  REQUIRE(run_cli({"--seed", "33", "train", "--ratings",
                   (tmp.path() / "ratings.csv").string(), "--snippets",
                   (tmp.path() / "snippets").string(), "--out", m1.string()})
              .code == 0);
  REQUIRE(run_cli({"train", "--ratings", (tmp.path() / "ratings.csv").string(),
                   "--snippets", (tmp.path() / "snippets").string(), "--out",
                   m2.string(), "--seed", "33"})
              .code == 0);
  CHECK(read_file(m1) == read_file(m2));
}

TEST_CASE("corpus subcommand writes report and csv", "[cli]") {
  test::TempDir tmp;
  write_training_data(tmp);
  auto model_path = tmp.path() / "model.json";
  REQUIRE(run_cli({"train", "--ratings", (tmp.path() / "ratings.csv").string(),
                   "--snippets", (tmp.path() / "snippets").string(), "--out",
                   model_path.string(), "--seed", "7"})
              .code == 0);
  tmp.write("corpus/2019/a.R", "x <- 1\n");
  tmp.write("corpus/2020/b.R", "yy <- 22\nzz <- 1\n");
  auto report_path = tmp.path() / "report.json";
  auto csv_path = tmp.path() / "report.csv";
  CliResult r = run_cli({"corpus", (tmp.path() / "corpus").string(), "--model",
                         model_path.string(), "--report", report_path.string(),
                         "--csv", csv_path.string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(read_file(report_path));
  REQUIRE(j["groups"].size() == 2);
  CHECK(j["groups"][0]["group"] == "2019");
  CHECK(j["groups"][1]["group"] == "2020");
  std::string csv = read_file(csv_path);
  CHECK(csv.starts_with("path,group,score,line_count\n"));
  CHECK(csv.find("2019/a.R,2019,") != std::string::npos);
}

TEST_CASE("json output is a single parseable document", "[cli]") {
  test::TempDir tmp;
  auto file = tmp.write("a.R", "x <- 1\n");
  for (auto args : std::vector<std::vector<std::string>>{
           {"--json", "features", file.string()}}) {
    CliResult r = run_cli(args);
    REQUIRE(r.code == 0);
    CHECK_NOTHROW(nlohmann::json::parse(r.out));
  }
}

TEST_CASE("seeded json subcommands repeat byte-for-byte", "[cli]") {
  test::TempDir tmp;
  write_training_data(tmp);
  std::vector<std::string> importance = {
      "--json", "importance", "--ratings",
      (tmp.path() / "ratings.csv").string(), "--snippets",
      (tmp.path() / "snippets").string(), "--seed", "9",
      "--permutations", "100"};
  CliResult a = run_cli(importance);
  CliResult b = run_cli(importance);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  auto model_path = tmp.path() / "model.json";
  REQUIRE(run_cli({"train", "--ratings", (tmp.path() / "ratings.csv").string(),
                   "--snippets", (tmp.path() / "snippets").string(), "--out",
                   model_path.string(), "--seed", "9"})
              .code == 0);
  auto probe = tmp.write("probe.R", "zz <- 1 + 2\n");
  std::vector<std::string> score = {"--json", "score", probe.string(),
                                    "--model", model_path.string()};
  CHECK(run_cli(score).out == run_cli(score).out);
}
