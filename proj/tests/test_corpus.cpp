#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "helpers.hpp"
#include "re3/corpus.hpp"

using namespace re3;

namespace {

ReadabilityModel simple_model() {
  ReadabilityModel m;
  m.feature_order.assign(feature_names().begin(), feature_names().end());
  m.means.assign(kFeatureCount, 0.0);
  m.stds.assign(kFeatureCount, 1.0);
  m.weights.assign(kFeatureCount, 0.0);
  m.weights[static_cast<int>(Feature::AvgLineLength)] = 0.1;
  m.bias = 4.0;
  return m;
}

} // namespace

TEST_CASE("directory grouping by first path segment", "[corpus]") {
  test::TempDir tmp;
  tmp.write("2019/a.R", "x <- 1\n");
  tmp.write("2019/b.R", "yy <- 22\n");
  tmp.write("2020/c.R", "zzz <- 333\n");
  tmp.write("root.R", "r <- 0\n");
  CorpusResult res = score_corpus(tmp.path(), simple_model());
  REQUIRE(res.records.size() == 4);
  CHECK(res.records[0].group == "2019");
  CHECK(res.records[1].group == "2019");
  CHECK(res.records[2].group == "2020");
  CHECK(res.records[3].group == "unknown");
}

TEST_CASE("sidecar groups.csv wins over path segments", "[corpus]") {
  test::TempDir tmp;
  tmp.write("2019/a.R", "x <- 1\n");
  tmp.write("groups.csv", "path,group\n2019/a.R,special\n");
  CorpusResult res = score_corpus(tmp.path(), simple_model());
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].group == "special");
}

TEST_CASE("empty and oversized files land in the skip list", "[corpus]") {
  test::TempDir tmp;
  tmp.write("ok.R", "x <- 1\n");
  tmp.write("empty.R", "");
  tmp.write("huge.R", std::string(kCorpusMaxFileBytes + 1, 'x'));
  CorpusResult res = score_corpus(tmp.path(), simple_model());
  REQUIRE(res.records.size() == 1);
  REQUIRE(res.skipped.size() == 2);
  bool empty_seen = false, huge_seen = false;
  for (const SkippedFile &s : res.skipped) {
    if (s.path == "empty.R" && s.reason == "EmptyFile")
      empty_seen = true;
    if (s.path == "huge.R" && s.reason == "FileTooLarge")
      huge_seen = true;
  }
  CHECK(empty_seen);
  CHECK(huge_seen);
}

TEST_CASE("no R files raises NoFilesFound", "[corpus]") {
  test::TempDir tmp;
  tmp.write("notes.txt", "not R\n");
  CHECK_THROWS_AS(score_corpus(tmp.path(), simple_model()), Error);
}

TEST_CASE("corpus scores equal one-at-a-time scoring", "[corpus]") {
  test::TempDir tmp;
  Rng rng(88);
  ReadabilityModel model = simple_model();
  for (int i = 0; i < 20; ++i)
    tmp.write("g/" + std::to_string(i) + ".R", test::random_source(rng));
  CorpusResult res = score_corpus(tmp.path(), model);
  REQUIRE(res.records.size() == 20);
  for (const CorpusRecord &r : res.records) {
    SourceFile src = SourceFile::load(tmp.path() / r.path);
    CHECK(r.score == predict(model, extract_features(src)));
  }
}

TEST_CASE("distribution report singleton", "[corpus]") {
  CorpusRecord rec;
  rec.path = "a.R";
  rec.group = "g";
  rec.score = 6.2;
  DistributionReport rep = distribution_report({rec});
  REQUIRE(rep.groups.size() == 1);
  CHECK(rep.groups[0].count == 1);
  CHECK(rep.groups[0].mean == 6.2);
  CHECK(rep.groups[0].median == 6.2);
  int nonzero = 0;
  for (int c : rep.groups[0].histogram)
    nonzero += c;
  CHECK(nonzero == 1);
  // 18 half-width bins over [1, 10]
  CHECK(rep.groups[0].histogram.size() == 18);
  CHECK(rep.groups[0].histogram[10] == 1); // [6.0, 6.5)
}

TEST_CASE("distribution report small group arithmetic", "[corpus]") {
  std::vector<CorpusRecord> records;
  for (double s : {5.0, 5.0, 7.0}) {
    CorpusRecord r;
    r.group = "g";
    r.score = s;
    records.push_back(r);
  }
  DistributionReport rep = distribution_report(records);
  CHECK(rep.groups[0].mean == Catch::Approx(5.0 + 2.0 / 3.0).margin(1e-9));
  CHECK(rep.groups[0].median == 5.0);
  CHECK(rep.groups[0].min == 5.0);
  CHECK(rep.groups[0].max == 7.0);
}

TEST_CASE("histogram counts conserve the group counts", "[corpus]") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CorpusRecord> records;
    int n = 1 + static_cast<int>(rng.bounded(50));
    for (int i = 0; i < n; ++i) {
      CorpusRecord r;
      r.group = "g" + std::to_string(rng.bounded(4));
      r.score = 1.0 + rng.uniform() * 9.0;
      records.push_back(r);
    }
    DistributionReport rep = distribution_report(records);
    int total = 0;
    for (const GroupStats &g : rep.groups) {
      int group_total = std::accumulate(g.histogram.begin(), g.histogram.end(), 0);
      REQUIRE(group_total == g.count);
      total += g.count;
    }
    REQUIRE(total == n);
  }
}

TEST_CASE("boundary score of exactly 10 lands in the last bin", "[corpus]") {
  CorpusRecord r;
  r.group = "g";
  r.score = 10.0;
  DistributionReport rep = distribution_report({r});
  CHECK(rep.groups[0].histogram.back() == 1);
}

TEST_CASE("report is independent of record order", "[corpus]") {
  Rng rng(7);
  std::vector<CorpusRecord> records;
  for (int i = 0; i < 30; ++i) {
    CorpusRecord r;
    r.group = i % 2 ? "a" : "b";
    r.score = 1.0 + rng.uniform() * 9.0;
    records.push_back(r);
  }
  DistributionReport before = distribution_report(records);
  rng.shuffle(records);
  DistributionReport after = distribution_report(records);
  REQUIRE(before.groups.size() == after.groups.size());
  for (std::size_t i = 0; i < before.groups.size(); ++i) {
    CHECK(before.groups[i].group == after.groups[i].group);
    CHECK(before.groups[i].histogram == after.groups[i].histogram);
    CHECK(before.groups[i].mean == after.groups[i].mean);
  }
}
