#pragma once
// Check-in ingestion: parsing, preprocessing filters, chronological
// train/test split and on-disk dataset layout.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stpudgat {

struct CheckIn {
  std::string user_id;
  std::string poi_id;
  std::int64_t timestamp = 0;  // seconds since epoch
  double lat = 0.0;
  double lon = 0.0;
};

struct ParseError : std::runtime_error {
  std::size_t line;
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
};

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreprocessConfig {
  int min_users_per_poi = 10;   // keep POIs visited by strictly more users
  int min_visits_per_user = 10;
  int max_visits_per_user = 30;
  double train_fraction = 0.7;
  bool cold_start = false;
  // Optional pre-filter hook applied before the standard filters
  // (e.g. country restriction). Null means no pre-filter.
  bool (*pre_filter)(const CheckIn&) = nullptr;
};

struct TestPair {
  int prev_poi;
  int target_poi;
  std::int64_t target_ts;
};

struct TrainVisit {
  int poi;
  std::int64_t ts;
};

struct Dataset {
  std::vector<std::string> user_ids;
  std::vector<std::string> poi_ids;
  std::vector<std::pair<double, double>> poi_coords;  // (lat, lon)
  std::vector<std::vector<TrainVisit>> train_visits;  // per user, time order
  std::vector<std::vector<TestPair>> test_pairs;      // per user, time order

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_pois() const { return poi_ids.size(); }
  std::size_t total_train_visits() const;
  std::size_t total_test_pairs() const;
  std::vector<int> train_seq(std::size_t user) const;  // POI indices only
  // Distinct POIs appearing in any train sequence.
  std::vector<bool> train_poi_mask() const;

  // Directory layout: pois.tsv, users.tsv, visits.tsv.
  void save(const std::string& dir) const;
  static Dataset load(const std::string& dir);
};

// Parses tab-separated `user_id  poi_id  timestamp  lat  lon` records.
// Timestamps are integer epoch-seconds or ISO-8601 UTC strings.
std::vector<CheckIn> parse_checkins(std::string_view text);

Dataset preprocess(std::span<const CheckIn> checkins,
                   const PreprocessConfig& cfg);

// Cold-start regime: POIs visited by more than 1 user, users with
// fewer than 10 visits, same split fraction.
Dataset cold_start_preprocess(std::span<const CheckIn> checkins);

// ISO-8601 UTC (e.g. "2013-04-01T00:00:00Z") to epoch seconds.
std::optional<std::int64_t> parse_iso8601_utc(std::string_view s);

}  // namespace stpudgat
