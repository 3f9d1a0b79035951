#include "stpudgat/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

namespace stpudgat {

namespace {
constexpr double kMinSpatialDistance = 1e-6;  // degrees
constexpr double kMinTemporalInterval = 1.0;  // seconds
}  // namespace

const char* graph_kind_name(GraphKind k) {
  switch (k) {
    case GraphKind::pp: return "pp";
    case GraphKind::spatial: return "spatial";
    case GraphKind::temporal: return "temporal";
    case GraphKind::preference: return "preference";
    case GraphKind::user: return "user";
  }
  return "?";
}

namespace {
GraphKind graph_kind_from_name(const std::string& s) {
  if (s == "pp") return GraphKind::pp;
  if (s == "spatial") return GraphKind::spatial;
  if (s == "temporal") return GraphKind::temporal;
  if (s == "preference") return GraphKind::preference;
  if (s == "user") return GraphKind::user;
  throw std::runtime_error("unknown graph kind '" + s + "'");
}
}  // namespace

void WeightedGraph::add_edge(int i, int j, double w) {
  if (i == j) throw std::invalid_argument("add_edge: self-loop");
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw std::invalid_argument("add_edge: weight must be positive finite");
  }
  auto insert = [&](int a, int b) {
    auto& list = adj_[std::size_t(a)];
    auto it = std::lower_bound(
        list.begin(), list.end(), b,
        [](const std::pair<int, double>& e, int v) { return e.first < v; });
    if (it != list.end() && it->first == b) {
      it->second = w;
    } else {
      list.insert(it, {b, w});
    }
  };
  insert(i, j);
  insert(j, i);
}

bool WeightedGraph::has_edge(int i, int j) const {
  return edge_weight(i, j) > 0.0;
}

double WeightedGraph::edge_weight(int i, int j) const {
  const auto& list = adj_[std::size_t(i)];
  auto it = std::lower_bound(
      list.begin(), list.end(), j,
      [](const std::pair<int, double>& e, int v) { return e.first < v; });
  if (it != list.end() && it->first == j) return it->second;
  return 0.0;
}

std::size_t WeightedGraph::num_edges() const {
  std::size_t twice = 0;
  for (const auto& list : adj_) twice += list.size();
  return twice / 2;
}

double WeightedGraph::total_edge_weight() const {
  double twice = 0.0;
  for (const auto& list : adj_)
    for (const auto& [j, w] : list) twice += w;
  return twice / 2.0;
}

std::vector<int> WeightedGraph::closed_neighborhood(int v) const {
  std::vector<int> out;
  out.reserve(adj_[std::size_t(v)].size() + 1);
  out.push_back(v);
  for (const auto& [j, w] : adj_[std::size_t(v)]) out.push_back(j);
  return out;
}

void WeightedGraph::save(std::ostream& os) const {
  os << graph_kind_name(kind_) << '\n' << num_vertices() << '\n';
  os.precision(12);
  for (std::size_t i = 0; i < adj_.size(); ++i) {
    for (const auto& [j, w] : adj_[i]) {
      if (int(i) < j) os << i << ' ' << j << ' ' << w << '\n';
    }
  }
}

WeightedGraph WeightedGraph::load(std::istream& is) {
  std::string kind_name;
  std::size_t n;
  if (!(is >> kind_name >> n)) {
    throw std::runtime_error("graph load: bad header");
  }
  const GraphKind kind = graph_kind_from_name(kind_name);
  WeightedGraph g(kind,
                  kind == GraphKind::user ? VertexDomain::user
                                          : VertexDomain::poi,
                  n);
  int i, j;
  double w;
  while (is >> i >> j >> w) g.add_edge(i, j, w);
  return g;
}

// ------------------------------------------------------------------ builders

WeightedGraph build_pp_graph(std::span<const int> train_seq,
                             std::size_t num_pois) {
  if (train_seq.empty()) {
    throw std::invalid_argument("build_pp_graph: empty train sequence");
  }
  WeightedGraph g(GraphKind::pp, VertexDomain::poi, num_pois);
  std::vector<int> distinct(train_seq.begin(), train_seq.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  for (std::size_t a = 0; a < distinct.size(); ++a) {
    for (std::size_t b = a + 1; b < distinct.size(); ++b) {
      g.add_edge(distinct[a], distinct[b], 1.0);
    }
  }
  return g;
}

namespace {
double spatial_distance(const std::pair<double, double>& a,
                        const std::pair<double, double>& b, bool haversine) {
  if (!haversine) {
    const double dlat = a.first - b.first;
    const double dlon = a.second - b.second;
    return std::sqrt(dlat * dlat + dlon * dlon);
  }
  constexpr double kEarthRadiusKm = 6371.0;
  const double to_rad = std::numbers::pi / 180.0;
  const double lat1 = a.first * to_rad, lat2 = b.first * to_rad;
  const double dlat = (b.first - a.first) * to_rad;
  const double dlon = (b.second - a.second) * to_rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}
}  // namespace

WeightedGraph build_spatial_graph(
    std::span<const std::pair<double, double>> poi_coords,
    const GraphConfig& cfg) {
  const std::size_t n = poi_coords.size();
  if (n < 2) {
    throw std::invalid_argument("build_spatial_graph: need at least 2 POIs");
  }
  if (cfg.sigma < 1) {
    throw std::invalid_argument("build_spatial_graph: sigma must be >= 1");
  }
  WeightedGraph g(GraphKind::spatial, VertexDomain::poi, n);
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back(
          spatial_distance(poi_coords[i], poi_coords[j], cfg.haversine),
          int(j));
    }
    // Ties at the sigma-th rank: lower vertex index wins.
    const std::size_t k = std::min<std::size_t>(std::size_t(cfg.sigma),
                                                dist.size());
    std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(k),
                      dist.end());
    for (std::size_t r = 0; r < k; ++r) {
      const double d = std::max(dist[r].first, kMinSpatialDistance);
      g.add_edge(int(i), dist[r].second, 1.0 / d);
    }
  }
  return g;
}

WeightedGraph build_temporal_graph(const Dataset& ds) {
  if (ds.total_train_visits() < 2) {
    throw std::invalid_argument("build_temporal_graph: need >= 2 train visits");
  }
  // Merge all users' train visits and stable-sort chronologically.
  std::vector<TrainVisit> all;
  all.reserve(ds.total_train_visits());
  for (const auto& seq : ds.train_visits)
    all.insert(all.end(), seq.begin(), seq.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const TrainVisit& a, const TrainVisit& b) {
                     return a.ts < b.ts;
                   });

  std::map<std::pair<int, int>, std::pair<double, std::size_t>> intervals;
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const int a = all[i].poi, b = all[i + 1].poi;
    if (a == b) continue;
    const auto key = std::minmax(a, b);
    auto& [sum, count] = intervals[{key.first, key.second}];
    sum += double(all[i + 1].ts - all[i].ts);
    ++count;
  }

  WeightedGraph g(GraphKind::temporal, VertexDomain::poi, ds.num_pois());
  for (const auto& [pair, acc] : intervals) {
    const double mean = std::max(acc.first / double(acc.second),
                                 kMinTemporalInterval);
    g.add_edge(pair.first, pair.second, 1.0 / mean);
  }
  return g;
}

WeightedGraph build_preference_graph(const Dataset& ds) {
  std::map<std::pair<int, int>, std::size_t> counts;
  for (const auto& seq : ds.train_visits) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      if (seq[i].poi == seq[i + 1].poi) continue;
      const auto key = std::minmax(seq[i].poi, seq[i + 1].poi);
      ++counts[{key.first, key.second}];
    }
  }
  WeightedGraph g(GraphKind::preference, VertexDomain::poi, ds.num_pois());
  for (const auto& [pair, count] : counts) {
    g.add_edge(pair.first, pair.second, double(count));
  }
  return g;
}

WeightedGraph build_user_graph(const Dataset& ds, const GraphConfig& cfg) {
  const std::size_t m = ds.num_users();
  std::vector<std::set<int>> sets(m);
  for (std::size_t u = 0; u < m; ++u) {
    for (const TrainVisit& v : ds.train_visits[u]) sets[u].insert(v.poi);
  }
  WeightedGraph g(GraphKind::user, VertexDomain::user, m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      std::size_t inter = 0;
      const auto& sa = sets[a];
      const auto& sb = sets[b];
      const auto& small = sa.size() <= sb.size() ? sa : sb;
      const auto& large = sa.size() <= sb.size() ? sb : sa;
      for (int v : small) inter += large.count(v);
      const std::size_t uni = sa.size() + sb.size() - inter;
      const double jaccard = uni == 0 ? 0.0 : double(inter) / double(uni);
      if (jaccard > cfg.jaccard_threshold) {
        g.add_edge(int(a), int(b), jaccard);
      }
    }
  }
  return g;
}

}  // namespace stpudgat
