#include "stpudgat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace stpudgat {

namespace fs = std::filesystem;

// ------------------------------------------------------------------- parsing

std::optional<std::int64_t> parse_iso8601_utc(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS with optional trailing 'Z'.
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  int y, mo, d, h, mi, sec;
  if (std::sscanf(std::string(s).c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h,
                  &mi, &sec) != 6) {
    return std::nullopt;
  }
  using namespace std::chrono;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
    return std::nullopt;
  }
  const year_month_day ymd{year(y), month(unsigned(mo)), day(unsigned(d))};
  if (!ymd.ok()) return std::nullopt;
  const sys_days days{ymd};
  return std::int64_t(days.time_since_epoch().count()) * 86400 + h * 3600 +
         mi * 60 + sec;
}

namespace {

std::optional<double> parse_double(std::string_view s) {
  double v;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  std::int64_t v;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  return parse_iso8601_utc(s);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::vector<CheckIn> parse_checkins(std::string_view text) {
  std::vector<CheckIn> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    CheckIn c;
    c.user_id = std::string(fields[0]);
    c.poi_id = std::string(fields[1]);
    if (c.user_id.empty() || c.poi_id.empty()) {
      throw ParseError(line_no, "empty user or poi id");
    }
    const auto ts = parse_timestamp(fields[2]);
    if (!ts || *ts < 0) {
      throw ParseError(line_no,
                       "invalid timestamp '" + std::string(fields[2]) + "'");
    }
    c.timestamp = *ts;
    const auto lat = parse_double(fields[3]);
    const auto lon = parse_double(fields[4]);
    if (!lat || *lat < -90.0 || *lat > 90.0) {
      throw ParseError(line_no,
                       "invalid latitude '" + std::string(fields[3]) + "'");
    }
    if (!lon || *lon < -180.0 || *lon > 180.0) {
      throw ParseError(line_no,
                       "invalid longitude '" + std::string(fields[4]) + "'");
    }
    c.lat = *lat;
    c.lon = *lon;
    out.push_back(std::move(c));
  }
  return out;
}

// -------------------------------------------------------------- preprocessing

Dataset preprocess(std::span<const CheckIn> checkins,
                   const PreprocessConfig& cfg) {
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0) {
    throw DatasetError("train_fraction must be in (0,1)");
  }
  if (cfg.min_visits_per_user > cfg.max_visits_per_user) {
    throw DatasetError("min_visits_per_user > max_visits_per_user");
  }

  std::vector<const CheckIn*> pool;
  pool.reserve(checkins.size());
  for (const CheckIn& c : checkins) {
    if (cfg.pre_filter && !cfg.pre_filter(c)) continue;
    pool.push_back(&c);
  }

  // POI filter: keep POIs visited by strictly more than min_users_per_poi
  // distinct users. Applied once, before the user filter.
  std::map<std::string, std::set<std::string>> poi_users;
  for (const CheckIn* c : pool) poi_users[c->poi_id].insert(c->user_id);
  std::set<std::string> kept_pois;
  for (const auto& [poi, users] : poi_users) {
    if (int(users.size()) > cfg.min_users_per_poi) kept_pois.insert(poi);
  }
  std::erase_if(pool, [&](const CheckIn* c) {
    return !kept_pois.contains(c->poi_id);
  });

  // User filter on remaining visit counts (inclusive bounds).
  std::map<std::string, int> user_visits;
  for (const CheckIn* c : pool) ++user_visits[c->user_id];
  std::erase_if(pool, [&](const CheckIn* c) {
    const int n = user_visits[c->user_id];
    return n < cfg.min_visits_per_user || n > cfg.max_visits_per_user;
  });

  // Group per user in first-appearance order, stable-sort by timestamp.
  std::vector<std::string> user_order;
  std::map<std::string, std::vector<const CheckIn*>> per_user;
  for (const CheckIn* c : pool) {
    auto [it, inserted] = per_user.try_emplace(c->user_id);
    if (inserted) user_order.push_back(c->user_id);
    it->second.push_back(c);
  }
  for (auto& [user, visits] : per_user) {
    std::stable_sort(visits.begin(), visits.end(),
                     [](const CheckIn* a, const CheckIn* b) {
                       return a->timestamp < b->timestamp;
                     });
  }

  // POI index space over the post-filter corpus, in visit order.
  Dataset ds;
  std::map<std::string, int> poi_index;
  auto intern_poi = [&](const CheckIn* c) {
    auto [it, inserted] = poi_index.try_emplace(c->poi_id, int(ds.poi_ids.size()));
    if (inserted) {
      ds.poi_ids.push_back(c->poi_id);
      ds.poi_coords.emplace_back(c->lat, c->lon);
    }
    return it->second;
  };
  for (const CheckIn* c : pool) intern_poi(c);

  for (const std::string& user : user_order) {
    const auto& visits = per_user[user];
    const std::size_t len = visits.size();
    const auto train_len =
        std::size_t(std::ceil(cfg.train_fraction * double(len)));
    if (train_len >= len) continue;  // empty test portion: drop the user

    std::vector<TrainVisit> train;
    std::vector<TestPair> test;
    for (std::size_t i = 0; i < train_len; ++i) {
      train.push_back({poi_index[visits[i]->poi_id], visits[i]->timestamp});
    }
    int prev = train.back().poi;
    for (std::size_t i = train_len; i < len; ++i) {
      const int target = poi_index[visits[i]->poi_id];
      test.push_back({prev, target, visits[i]->timestamp});
      prev = target;
    }
    ds.user_ids.push_back(user);
    ds.train_visits.push_back(std::move(train));
    ds.test_pairs.push_back(std::move(test));
  }

  if (ds.user_ids.empty()) {
    throw DatasetError("no users survive preprocessing filters");
  }
  return ds;
}

Dataset cold_start_preprocess(std::span<const CheckIn> checkins) {
  PreprocessConfig cfg;
  cfg.min_users_per_poi = 1;
  cfg.min_visits_per_user = 1;
  cfg.max_visits_per_user = 9;  // "visit counts less than 10"
  cfg.train_fraction = 0.7;
  cfg.cold_start = true;
  return preprocess(checkins, cfg);
}

// --------------------------------------------------------------------- views

std::size_t Dataset::total_train_visits() const {
  std::size_t n = 0;
  for (const auto& v : train_visits) n += v.size();
  return n;
}

std::size_t Dataset::total_test_pairs() const {
  std::size_t n = 0;
  for (const auto& v : test_pairs) n += v.size();
  return n;
}

std::vector<int> Dataset::train_seq(std::size_t user) const {
  std::vector<int> out;
  out.reserve(train_visits[user].size());
  for (const TrainVisit& v : train_visits[user]) out.push_back(v.poi);
  return out;
}

std::vector<bool> Dataset::train_poi_mask() const {
  std::vector<bool> mask(num_pois(), false);
  for (const auto& seq : train_visits)
    for (const TrainVisit& v : seq) mask[std::size_t(v.poi)] = true;
  return mask;
}

// --------------------------------------------------------------------- (de)io

void Dataset::save(const std::string& dir) const {
  fs::create_directories(dir);
  {
    std::ofstream os(dir + "/pois.tsv");
    os.precision(12);
    for (std::size_t i = 0; i < poi_ids.size(); ++i) {
      os << i << '\t' << poi_ids[i] << '\t' << poi_coords[i].first << '\t'
         << poi_coords[i].second << '\n';
    }
  }
  {
    std::ofstream os(dir + "/users.tsv");
    for (std::size_t i = 0; i < user_ids.size(); ++i) {
      os << i << '\t' << user_ids[i] << '\n';
    }
  }
  {
    std::ofstream os(dir + "/visits.tsv");
    for (std::size_t u = 0; u < user_ids.size(); ++u) {
      for (const TrainVisit& v : train_visits[u]) {
        os << u << '\t' << v.poi << '\t' << v.ts << "\ttrain\n";
      }
      for (const TestPair& t : test_pairs[u]) {
        os << u << '\t' << t.target_poi << '\t' << t.target_ts << "\ttest\n";
      }
    }
  }
}

Dataset Dataset::load(const std::string& dir) {
  Dataset ds;
  {
    std::ifstream is(dir + "/pois.tsv");
    if (!is) throw DatasetError("missing " + dir + "/pois.tsv");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::size_t idx;
      std::string id;
      double lat, lon;
      ss >> idx >> id >> lat >> lon;
      ds.poi_ids.push_back(id);
      ds.poi_coords.emplace_back(lat, lon);
    }
  }
  {
    std::ifstream is(dir + "/users.tsv");
    if (!is) throw DatasetError("missing " + dir + "/users.tsv");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::size_t idx;
      std::string id;
      ss >> idx >> id;
      ds.user_ids.push_back(id);
    }
  }
  ds.train_visits.resize(ds.num_users());
  ds.test_pairs.resize(ds.num_users());
  {
    std::ifstream is(dir + "/visits.tsv");
    if (!is) throw DatasetError("missing " + dir + "/visits.tsv");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::size_t u;
      int poi;
      std::int64_t ts;
      std::string flag;
      ss >> u >> poi >> ts >> flag;
      if (u >= ds.num_users() || poi < 0 || std::size_t(poi) >= ds.num_pois()) {
        throw DatasetError("visits.tsv: index out of range");
      }
      if (flag == "train") {
        ds.train_visits[u].push_back({poi, ts});
      } else {
        const int prev = ds.test_pairs[u].empty()
                             ? ds.train_visits[u].back().poi
                             : ds.test_pairs[u].back().target_poi;
        ds.test_pairs[u].push_back({prev, poi, ts});
      }
    }
  }
  return ds;
}

}  // namespace stpudgat
