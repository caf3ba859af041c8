#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "re3/ratings.hpp"

using namespace re3;

namespace {

constexpr const char *kHeader =
    "snippet_id,rater_id,rating,experience_band,knows_r\n";

RatingsDataset dataset_from_ratings(
    const std::vector<std::pair<std::string, std::vector<int>>> &per_snippet) {
  RatingsDataset ds;
  for (const auto &[id, ratings] : per_snippet) {
    ds.snippets.emplace(id, SourceFile::from_text(id, "x <- 1\n"));
    int rater = 0;
    for (int r : ratings) {
      RatingRecord rec;
      rec.snippet_id = id;
      rec.rater_id = "r" + std::to_string(rater++);
      rec.rating = r;
      ds.records.push_back(rec);
    }
  }
  return ds;
}

// Independent fence oracle: sort, interpolate quartiles at p*(n-1), apply
// the 1.5*IQR rule directly. Kept separate from the library code on purpose.
std::vector<bool> oracle_removed(std::vector<int> ratings) {
  std::vector<int> sorted = ratings;
  std::sort(sorted.begin(), sorted.end());
  auto interp = [&](double p) {
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(i);
    double lo = sorted[i];
    double hi = sorted[std::min(i + 1, sorted.size() - 1)];
    return lo + frac * (hi - lo);
  };
  double q1 = interp(0.25), q3 = interp(0.75);
  double span = q3 - q1;
  std::vector<bool> removed;
  for (int r : ratings)
    removed.push_back(r < q1 - 1.5 * span || r > q3 + 1.5 * span);
  return removed;
}

} // namespace

TEST_CASE("load ratings happy path", "[ratings]") {
  test::TempDir tmp;
  tmp.write("snippets/s1.R", "x <- 1\n");
  auto csv = tmp.write("ratings.csv", std::string(kHeader) +
                                          "s1,alice,4,0-3,true\n"
                                          "s1,bob,7,,\n"
                                          "s1,carol,9,5+,false\n");
  RatingsDataset ds = load_ratings(csv, tmp.path() / "snippets");
  REQUIRE(ds.records.size() == 3);
  CHECK(ds.records[0].rating == 4);
  CHECK(ds.records[0].experience == ExperienceBand::Years0To3);
  CHECK(ds.records[0].knows_r == true);
  CHECK_FALSE(ds.records[1].experience.has_value());
  CHECK_FALSE(ds.records[1].knows_r.has_value());
  REQUIRE(ds.snippets.count("s1") == 1);
}

TEST_CASE("rating out of range is rejected with the line number",
          "[ratings]") {
  test::TempDir tmp;
  tmp.write("snippets/s1.R", "x <- 1\n");
  auto csv =
      tmp.write("ratings.csv", std::string(kHeader) + "s1,alice,11,,\n");
  try {
    load_ratings(csv, tmp.path() / "snippets");
    FAIL("expected RatingOutOfRange");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::RatingOutOfRange);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("unknown snippet is rejected", "[ratings]") {
  test::TempDir tmp;
  std::filesystem::create_directories(tmp.path() / "snippets");
  auto csv =
      tmp.write("ratings.csv", std::string(kHeader) + "missing,alice,5,,\n");
  try {
    load_ratings(csv, tmp.path() / "snippets");
    FAIL("expected UnknownSnippet");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::UnknownSnippet);
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
}

TEST_CASE("malformed rows are rejected", "[ratings]") {
  test::TempDir tmp;
  tmp.write("snippets/s1.R", "x <- 1\n");
  for (const char *row : {"s1,alice\n", "s1,alice,notanum,,\n",
                          "s1,alice,5,weird,\n", "s1,alice,5,,maybe\n"}) {
    auto csv = tmp.write("ratings.csv", std::string(kHeader) + row);
    try {
      load_ratings(csv, tmp.path() / "snippets");
      FAIL("expected MalformedRow");
    } catch (const Error &e) {
      CHECK(e.code() == Errc::MalformedRow);
    }
  }
  // bad header
  auto csv = tmp.write("ratings.csv", "id,rating\ns1,5\n");
  CHECK_THROWS_AS(load_ratings(csv, tmp.path() / "snippets"), Error);
}

TEST_CASE("CRLF ratings files parse like LF ones", "[ratings]") {
  test::TempDir tmp;
  tmp.write("snippets/s1.R", "x <- 1\n");
  auto csv = tmp.write(
      "ratings.csv",
      "snippet_id,rater_id,rating,experience_band,knows_r\r\ns1,a,5,,\r\n");
  RatingsDataset ds = load_ratings(csv, tmp.path() / "snippets");
  REQUIRE(ds.records.size() == 1);
  CHECK(ds.records[0].rating == 5);
}

TEST_CASE("degenerate IQR removes nothing", "[ratings]") {
  auto ds = dataset_from_ratings({{"s", {5, 5, 5, 5}}});
  OutlierResult res = remove_outliers(ds);
  CHECK(res.removed.empty());
  CHECK(res.kept.records.size() == 4);
}

TEST_CASE("a lone low rating beyond the fence is removed", "[ratings]") {
  auto ds = dataset_from_ratings({{"s", {1, 6, 6, 6, 6, 6, 6, 6}}});
  OutlierResult res = remove_outliers(ds);
  REQUIRE(res.removed.size() == 1);
  CHECK(res.removed[0].rating == 1);
  CHECK(res.kept.records.size() == 7);
}

TEST_CASE("mid-spread snippet matches the fence oracle", "[ratings]") {
  std::vector<int> ratings = {2, 4, 4, 5, 6, 6, 9};
  auto ds = dataset_from_ratings({{"s", ratings}});
  OutlierResult res = remove_outliers(ds);
  std::vector<bool> expected = oracle_removed(ratings);
  std::size_t expected_removed =
      static_cast<std::size_t>(std::count(expected.begin(), expected.end(), true));
  CHECK(res.removed.size() == expected_removed);
}

TEST_CASE("randomized snippets agree with the fence oracle and fence values "
          "are never removed",
          "[ratings]") {
  Rng rng(5150);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 3 + rng.bounded(12);
    std::vector<int> ratings;
    for (std::size_t i = 0; i < n; ++i)
      ratings.push_back(1 + static_cast<int>(rng.bounded(10)));
    auto ds = dataset_from_ratings({{"s", ratings}});
    OutlierResult res = remove_outliers(ds);

    std::vector<bool> expected = oracle_removed(ratings);
    REQUIRE(res.kept.records.size() + res.removed.size() == ratings.size());
    // order of records is preserved, so line up flags positionally
    std::size_t ki = 0;
    std::multiset<int> removed_ratings;
    for (const RatingRecord &r : res.removed)
      removed_ratings.insert(r.rating);
    std::multiset<int> expected_removed;
    for (std::size_t i = 0; i < ratings.size(); ++i)
      if (expected[i])
        expected_removed.insert(ratings[i]);
    REQUIRE(removed_ratings == expected_removed);
    (void)ki;
  }
}

TEST_CASE("aggregate targets", "[ratings]") {
  auto ds = dataset_from_ratings({{"a", {4, 6}}, {"b", {7}}});
  auto targets = aggregate_targets(ds);
  REQUIRE(targets.size() == 2);
  CHECK(targets["a"] == Catch::Approx(5.0));
  CHECK(targets["b"] == Catch::Approx(7.0));
}

TEST_CASE("snippet with no surviving ratings is excluded with a warning",
          "[ratings]") {
  RatingsDataset ds;
  ds.snippets.emplace("ghost", SourceFile::from_text("ghost", "x <- 1\n"));
  ds.snippets.emplace("real", SourceFile::from_text("real", "y <- 2\n"));
  RatingRecord rec;
  rec.snippet_id = "real";
  rec.rater_id = "r";
  rec.rating = 8;
  ds.records.push_back(rec);
  std::vector<std::string> warnings;
  auto targets = aggregate_targets(ds, &warnings);
  CHECK(targets.size() == 1);
  CHECK(targets.count("real") == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("ghost") != std::string::npos);
}
