#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "stpudgat/graphs.hpp"

using namespace stpudgat;

namespace {

Dataset make_dataset(std::size_t num_pois,
                     std::vector<std::vector<TrainVisit>> visits) {
  Dataset ds;
  for (std::size_t p = 0; p < num_pois; ++p) {
    ds.poi_ids.push_back("p" + std::to_string(p));
    ds.poi_coords.emplace_back(0.0, 0.0);
  }
  for (std::size_t u = 0; u < visits.size(); ++u)
    ds.user_ids.push_back("u" + std::to_string(u));
  ds.train_visits = std::move(visits);
  ds.test_pairs.resize(ds.user_ids.size());
  return ds;
}

// O(n^2) reference: the indices of the k closest other points to v, by
// (distance, index).
std::vector<int> brute_knn(
    const std::vector<std::pair<double, double>>& pts, int v, int k) {
  std::vector<std::pair<double, int>> d;
  for (int j = 0; j < int(pts.size()); ++j) {
    if (j == v) continue;
    const double dy = pts[v].first - pts[j].first;
    const double dx = pts[v].second - pts[j].second;
    d.emplace_back(std::sqrt(dy * dy + dx * dx), j);
  }
  std::sort(d.begin(), d.end());
  std::vector<int> out;
  for (int i = 0; i < k && i < int(d.size()); ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

TEST_CASE("pp graph is complete over the distinct visited pois") {
  const std::vector<int> seq{0, 1, 0, 2};
  const auto g = build_pp_graph(seq, 5);
  CHECK(g.num_edges() == 3);  // {0,1}, {0,2}, {1,2}
  CHECK(g.edge_weight(1, 2) == 1.0);
  CHECK_FALSE(g.has_edge(0, 3));
  CHECK(g.closed_neighborhood(0) == std::vector<int>{0, 1, 2});
  CHECK(g.closed_neighborhood(3) == std::vector<int>{3});

  const std::vector<int> solo{4};
  CHECK(build_pp_graph(solo, 5).num_edges() == 0);

  std::vector<int> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(i);
  CHECK(build_pp_graph(ten, 10).num_edges() == 45);
}

TEST_CASE("spatial graph small examples") {
  GraphConfig cfg;
  cfg.sigma = 1;

  // Two POIs 0.5 degrees apart: mutual nearest, weight 2.
  const std::vector<std::pair<double, double>> two{{0.0, 0.0}, {0.5, 0.0}};
  const auto g2 = build_spatial_graph(two, cfg);
  CHECK(g2.num_edges() == 1);
  CHECK(g2.edge_weight(0, 1) == doctest::Approx(2.0));

  // Six on a line at unit spacing, sigma = 1: each links to its nearest;
  // ties between equal distances go to the lower index.
  std::vector<std::pair<double, double>> six;
  for (int i = 0; i < 6; ++i) six.emplace_back(0.0, double(i));
  const auto g6 = build_spatial_graph(six, cfg);
  // 0->1, 1->0 (tie with 2), 2->1, 3->2, 4->3, 5->4: union is the path.
  CHECK(g6.num_edges() == 5);
  for (int i = 0; i + 1 < 6; ++i) CHECK(g6.edge_weight(i, i + 1) == 1.0);

  // Coincident POIs are clamped, not infinite.
  const std::vector<std::pair<double, double>> same{{1.0, 1.0}, {1.0, 1.0}};
  const auto gs = build_spatial_graph(same, cfg);
  CHECK(gs.edge_weight(0, 1) == doctest::Approx(1e6));
}

TEST_CASE("spatial graph matches brute-force knn union on random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + int(rng() % 28);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
    GraphConfig cfg;
    cfg.sigma = 1 + int(rng() % 5);
    const auto g = build_spatial_graph(pts, cfg);

    std::set<std::pair<int, int>> expect;
    for (int v = 0; v < n; ++v)
      for (int j : brute_knn(pts, v, cfg.sigma))
        expect.insert({std::min(v, j), std::max(v, j)});

    std::size_t found = 0;
    for (const auto& [i, j] : expect) {
      CHECK(g.has_edge(i, j));
      ++found;
    }
    CHECK(g.num_edges() == found);
  }
}

TEST_CASE("temporal graph weights by inverse mean interval") {
  // One user: a@0, b@10, a@30 gives pair {a,b} intervals 10 and 20,
  // mean 15, weight 1/15.
  auto ds = make_dataset(2, {{{0, 0}, {1, 10}, {0, 30}}});
  const auto g = build_temporal_graph(ds);
  CHECK(g.num_edges() == 1);
  CHECK(g.edge_weight(0, 1) == doctest::Approx(1.0 / 15.0));

  // Simultaneous check-ins clamp at one second.
  auto ds2 = make_dataset(2, {{{0, 100}, {1, 100}}});
  CHECK(build_temporal_graph(ds2).edge_weight(0, 1) == doctest::Approx(1.0));

  // The sequence merges across users by time.
  auto ds3 = make_dataset(3, {{{0, 0}, {2, 20}}, {{1, 10}}});
  const auto g3 = build_temporal_graph(ds3);
  CHECK(g3.has_edge(0, 1));
  CHECK(g3.has_edge(1, 2));
  CHECK_FALSE(g3.has_edge(0, 2));
}

TEST_CASE("preference graph counts consecutive pairs per user") {
  // u1: [a, b, a] — pair {a,b} twice. u2: [b, c] — pair {b,c} once.
  auto ds = make_dataset(3, {{{0, 0}, {1, 1}, {0, 2}}, {{1, 0}, {2, 1}}});
  const auto g = build_preference_graph(ds);
  CHECK(g.edge_weight(0, 1) == 2.0);
  CHECK(g.edge_weight(1, 2) == 1.0);
  CHECK(g.num_edges() == 2);

  // Self-transitions contribute nothing.
  auto ds2 = make_dataset(2, {{{0, 0}, {0, 1}, {1, 2}}});
  const auto g2 = build_preference_graph(ds2);
  CHECK(g2.num_edges() == 1);
  CHECK(g2.edge_weight(0, 1) == 1.0);
}

TEST_CASE("user graph applies a strict jaccard cutoff") {
  // Sets {0,1,2,3,4} vs {4,5,6,7,8}: |I|=1, |U|=9, J=1/9 < 0.2 -> no edge.
  // Sets {0,1,2,3,4} vs {2,3,4,5,6}: |I|=3, |U|=7, J=3/7 > 0.2 -> edge.
  auto ds = make_dataset(
      9, {{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}},
          {{4, 0}, {5, 1}, {6, 2}, {7, 3}, {8, 4}},
          {{2, 0}, {3, 1}, {4, 2}, {5, 3}, {6, 4}}});
  GraphConfig cfg;
  const auto g = build_user_graph(ds, cfg);
  CHECK_FALSE(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK(g.edge_weight(0, 2) == doctest::Approx(3.0 / 7.0));
  // Users 1 and 2 share {4,5,6}: J = 3/7 as well.
  CHECK(g.has_edge(1, 2));

  // Exactly at the threshold: J({0},{0,...,4} with |I|=1,|U|=5) = 0.2,
  // strictly-above means no edge.
  auto ds2 = make_dataset(
      5, {{{0, 0}}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}}});
  CHECK(build_user_graph(ds2, cfg).num_edges() == 0);
}

TEST_CASE("graph invariants hold on a random preference graph") {
  std::mt19937_64 rng(7);
  std::vector<std::vector<TrainVisit>> visits(6);
  for (auto& seq : visits) {
    const int len = 4 + int(rng() % 10);
    for (int k = 0; k < len; ++k)
      seq.push_back({int(rng() % 8), std::int64_t(k)});
  }
  auto ds = make_dataset(8, std::move(visits));
  const auto g = build_preference_graph(ds);

  // Symmetry and positive weights.
  for (int v = 0; v < int(g.num_vertices()); ++v) {
    for (const auto& [j, w] : g.neighbors(v)) {
      CHECK(w > 0.0);
      CHECK(g.edge_weight(j, v) == w);
      CHECK(j != v);
    }
  }
  // Total weight equals the number of distinct consecutive transitions.
  std::size_t transitions = 0;
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    const auto seq = ds.train_seq(u);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
      if (seq[i] != seq[i + 1]) ++transitions;
  }
  CHECK(g.total_edge_weight() == doctest::Approx(double(transitions)));
}

TEST_CASE("graphs round-trip through the text format") {
  auto ds = make_dataset(4, {{{0, 0}, {1, 7}, {2, 9}, {0, 22}}, {{3, 5}}});
  const auto g = build_temporal_graph(ds);
  std::stringstream buf;
  g.save(buf);
  const auto ld = WeightedGraph::load(buf);
  CHECK(ld.kind() == g.kind());
  CHECK(ld.num_vertices() == g.num_vertices());
  CHECK(ld.num_edges() == g.num_edges());
  for (int v = 0; v < int(g.num_vertices()); ++v)
    for (const auto& [j, w] : g.neighbors(v))
      CHECK(ld.edge_weight(v, j) == doctest::Approx(w).epsilon(1e-10));
}
