#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "stpudgat/dataset.hpp"

using namespace stpudgat;

namespace {

// Builds a check-in line quickly.
std::string line(const std::string& u, const std::string& p, long long ts,
                 double lat = 40.0, double lon = -70.0) {
  return u + "\t" + p + "\t" + std::to_string(ts) + "\t" +
         std::to_string(lat) + "\t" + std::to_string(lon) + "\n";
}

}  // namespace

TEST_CASE("parses epoch and iso-8601 timestamps") {
  const std::string text =
      "u1\tp1\t1364774400\t40.75\t-73.98\n"
      "u2\tp2\t2013-04-01T00:00:00Z\t-33.86\t151.21\n";
  const auto cs = parse_checkins(text);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].user_id == "u1");
  CHECK(cs[0].timestamp == 1364774400);
  CHECK(cs[1].timestamp == 1364774400);  // same instant, ISO form
  CHECK(cs[0].lat == doctest::Approx(40.75));
  CHECK(cs[1].lon == doctest::Approx(151.21));
}

TEST_CASE("parse errors carry the line number") {
  CHECK_THROWS_WITH_AS(parse_checkins("u1\tp1\tnotatime\t0\t0\n"),
                       doctest::Contains("line 1"), ParseError);
  // Error on the second record.
  try {
    parse_checkins(line("u1", "p1", 100) + "u2\tp2\t5\t95.0\t0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK_THROWS_AS(parse_checkins("u1\tp1\n"), ParseError);
}

TEST_CASE("iso-8601 helper handles bad inputs") {
  CHECK(parse_iso8601_utc("2013-04-01T00:00:00Z").value() == 1364774400);
  CHECK_FALSE(parse_iso8601_utc("2013-04-01").has_value());
  CHECK_FALSE(parse_iso8601_utc("2013-13-01T00:00:00Z").has_value());
}

TEST_CASE("preprocess filters pois then users, once") {
  // p_rare is visited by a single user and must go; after it goes, u_thin
  // drops below the visit minimum and must go too. No re-filtering of POIs
  // afterwards.
  std::string text;
  // Four users visit p_a and p_b enough times.
  for (int u = 0; u < 4; ++u) {
    for (int k = 0; k < 3; ++k) {
      text += line("u" + std::to_string(u), "p_a", 100 * u + k);
      text += line("u" + std::to_string(u), "p_b", 100 * u + 10 + k);
    }
  }
  // u_thin: 5 visits to p_a plus 1 to p_rare.
  for (int k = 0; k < 5; ++k) text += line("u_thin", "p_a", 1000 + k);
  text += line("u_thin", "p_rare", 1100);

  PreprocessConfig cfg;
  cfg.min_users_per_poi = 3;  // keep POIs with > 3 distinct users
  cfg.min_visits_per_user = 6;
  cfg.max_visits_per_user = 30;

  const auto ds = preprocess(parse_checkins(text), cfg);
  // p_a, p_b have 5 and 4 distinct users; p_rare has 1.
  CHECK(ds.num_pois() == 2);
  // u_thin keeps only 5 visits after the POI filter, below the minimum.
  CHECK(ds.num_users() == 4);
  for (const auto& id : ds.user_ids) CHECK(id != "u_thin");
}

TEST_CASE("split is chronological with ceil(0.7 n) train visits") {
  std::string text;
  for (int k = 0; k < 10; ++k)
    text += line("u", "p" + std::to_string(k % 3), 1000 + k * 7);
  PreprocessConfig cfg;
  cfg.min_users_per_poi = 0;
  cfg.min_visits_per_user = 1;
  cfg.max_visits_per_user = 100;
  const auto ds = preprocess(parse_checkins(text), cfg);
  REQUIRE(ds.num_users() == 1);
  CHECK(ds.train_visits[0].size() == 7);  // ceil(0.7 * 10)
  CHECK(ds.test_pairs[0].size() == 3);
  // Every test pair's target comes after its predecessor and after all
  // train timestamps.
  const auto last_train = ds.train_visits[0].back().ts;
  std::int64_t prev_ts = last_train;
  for (const auto& tp : ds.test_pairs[0]) {
    CHECK(tp.target_ts >= prev_ts);
    prev_ts = tp.target_ts;
  }
  // First test pair chains off the final train visit.
  CHECK(ds.test_pairs[0][0].prev_poi == ds.train_visits[0].back().poi);
}

TEST_CASE("users with an empty test side are dropped") {
  // Two visits: train = ceil(1.4) = 2, so nothing remains for test.
  std::string text = line("u", "p0", 1) + line("u", "p1", 2) +
                     line("v", "p0", 1) + line("v", "p1", 2) +
                     line("v", "p0", 3) + line("v", "p1", 4);
  PreprocessConfig cfg;
  cfg.min_users_per_poi = 0;
  cfg.min_visits_per_user = 1;
  cfg.max_visits_per_user = 100;
  const auto ds = preprocess(parse_checkins(text), cfg);
  REQUIRE(ds.num_users() == 1);
  CHECK(ds.user_ids[0] == "v");
  CHECK(ds.train_visits[0].size() == 3);
  CHECK(ds.test_pairs[0].size() == 1);
}

TEST_CASE("empty result throws a dataset error") {
  PreprocessConfig cfg;  // defaults demand 10+ users per POI
  const auto cs = parse_checkins(line("u", "p", 1));
  CHECK_THROWS_AS(preprocess(cs, cfg), DatasetError);
}

TEST_CASE("cold-start keeps thin users and drops heavy ones") {
  std::string text;
  // POIs shared by two users so they survive the > 1 user filter.
  auto add_user = [&](const std::string& u, int visits) {
    for (int k = 0; k < visits; ++k)
      text += line(u, "p" + std::to_string(k % 4), 100 * k + (u[1] - '0'));
  };
  add_user("u1", 9);   // kept: fewer than 10 visits
  add_user("u2", 10);  // dropped: at the boundary
  add_user("u3", 9);   // kept
  add_user("u4", 2);   // train=2, test empty -> dropped later
  const auto ds = cold_start_preprocess(parse_checkins(text));
  std::set<std::string> users(ds.user_ids.begin(), ds.user_ids.end());
  CHECK(users == std::set<std::string>{"u1", "u3"});
}

TEST_CASE("dataset save/load round-trips") {
  std::string text;
  for (int u = 0; u < 3; ++u)
    for (int k = 0; k < 6; ++k)
      text += line("u" + std::to_string(u), "p" + std::to_string(k % 4),
                   50 * u + k, 40.0 + k, -70.0 - k);
  PreprocessConfig cfg;
  cfg.min_users_per_poi = 0;
  cfg.min_visits_per_user = 1;
  cfg.max_visits_per_user = 100;
  const auto ds = preprocess(parse_checkins(text), cfg);

  const auto dir =
      std::filesystem::temp_directory_path() / "stpudgat_dataset_rt";
  std::filesystem::create_directories(dir);
  ds.save(dir.string());
  const auto ld = Dataset::load(dir.string());
  std::filesystem::remove_all(dir);

  CHECK(ld.user_ids == ds.user_ids);
  CHECK(ld.poi_ids == ds.poi_ids);
  REQUIRE(ld.num_users() == ds.num_users());
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    CHECK(ld.train_seq(u) == ds.train_seq(u));
    REQUIRE(ld.test_pairs[u].size() == ds.test_pairs[u].size());
    for (std::size_t i = 0; i < ds.test_pairs[u].size(); ++i) {
      CHECK(ld.test_pairs[u][i].prev_poi == ds.test_pairs[u][i].prev_poi);
      CHECK(ld.test_pairs[u][i].target_poi == ds.test_pairs[u][i].target_poi);
    }
  }
  CHECK(ld.train_poi_mask() == ds.train_poi_mask());
}

TEST_CASE("coordinates outside valid ranges are rejected") {
  CHECK_THROWS_AS(parse_checkins("u\tp\t1\t91.0\t0\n"), ParseError);
  CHECK_THROWS_AS(parse_checkins("u\tp\t1\t0\t181.0\n"), ParseError);
}
