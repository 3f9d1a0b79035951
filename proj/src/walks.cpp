#include "stpudgat/walks.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace stpudgat {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Ranks candidate POIs by multiset frequency descending, index ascending,
// after removing the user's own train POIs; returns at most tau.
std::vector<int> rank_new_neighbors(const std::vector<int>& candidates,
                                    std::span<const int> user_train_pois,
                                    int tau) {
  std::vector<int> visited(user_train_pois.begin(), user_train_pois.end());
  std::sort(visited.begin(), visited.end());
  std::vector<std::pair<int, std::size_t>> freq;  // (poi, count), poi-sorted
  {
    std::vector<int> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      if (!std::binary_search(visited.begin(), visited.end(), sorted[i])) {
        freq.emplace_back(sorted[i], j - i);
      }
      i = j;
    }
  }
  std::stable_sort(freq.begin(), freq.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  std::vector<int> out;
  for (const auto& [poi, count] : freq) {
    if (int(out.size()) >= tau) break;
    out.push_back(poi);
  }
  return out;
}

}  // namespace

std::size_t WalkTable::total_recorded_steps() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.size();
  return n;
}

WalkTable run_walks(const WeightedGraph& g, const WalkConfig& cfg) {
  if (g.num_vertices() == 0) {
    throw std::invalid_argument("run_walks: empty graph");
  }
  if (cfg.mu < 1 || cfg.beta < 1) {
    throw std::invalid_argument("run_walks: mu and beta must be >= 1");
  }
  WalkTable wt;
  wt.kind = g.kind();
  wt.mu = cfg.mu;
  wt.beta = cfg.beta;
  wt.steps.resize(g.num_vertices());

  std::vector<double> cumulative;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    auto& rec = wt.steps[v];
    rec.reserve(std::size_t(cfg.mu) * std::size_t(cfg.beta));
    std::mt19937_64 rng(splitmix64(cfg.rng_seed ^ std::uint64_t(v)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int walk = 0; walk < cfg.mu; ++walk) {
      int cur = int(v);
      for (int step = 0; step < cfg.beta; ++step) {
        const auto nbrs = g.neighbors(cur);
        if (nbrs.empty()) {
          // Isolated (or dead-end-free by undirectedness): repeat in place.
          rec.push_back(cur);
          continue;
        }
        cumulative.clear();
        double total = 0.0;
        for (const auto& [j, w] : nbrs) {
          total += w;
          cumulative.push_back(total);
        }
        const double pick = unit(rng) * total;
        const std::size_t k =
            std::size_t(std::lower_bound(cumulative.begin(), cumulative.end(),
                                         pick) -
                        cumulative.begin());
        cur = nbrs[std::min(k, nbrs.size() - 1)].first;
        rec.push_back(cur);
      }
    }
  }
  return wt;
}

std::vector<int> explore_adjacency(const WeightedGraph& g,
                                   std::span<const int> user_train_pois,
                                   int tau) {
  if (user_train_pois.empty()) {
    throw std::invalid_argument("explore_adjacency: no seed POIs");
  }
  std::vector<int> candidates;
  for (int seed : user_train_pois) {
    if (seed < 0 || std::size_t(seed) >= g.num_vertices()) continue;
    const auto closed = g.closed_neighborhood(seed);
    candidates.insert(candidates.end(), closed.begin(), closed.end());
  }
  return rank_new_neighbors(candidates, user_train_pois, tau);
}

std::vector<int> explore_walks(const WalkTable& wt,
                               std::span<const int> user_train_pois, int tau) {
  if (user_train_pois.empty()) {
    throw std::invalid_argument("explore_walks: no seed POIs");
  }
  std::vector<int> candidates;
  for (int seed : user_train_pois) {
    if (seed < 0 || std::size_t(seed) >= wt.steps.size()) continue;
    const auto& rec = wt.steps[std::size_t(seed)];
    candidates.insert(candidates.end(), rec.begin(), rec.end());
  }
  return rank_new_neighbors(candidates, user_train_pois, tau);
}

Explorations compute_explorations(const Dataset& ds,
                                  const WeightedGraph& spatial,
                                  const WeightedGraph& temporal,
                                  const WeightedGraph& preference,
                                  const WalkTable& spatial_walks,
                                  const WalkTable& temporal_walks,
                                  const WalkTable& preference_walks, int tau) {
  Explorations ex;
  ex.entries.resize(ds.num_users());
  const WeightedGraph* graphs[3] = {&spatial, &temporal, &preference};
  const WalkTable* tables[3] = {&spatial_walks, &temporal_walks,
                                &preference_walks};
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    const std::vector<int> seeds = ds.train_seq(u);
    for (int gi = 0; gi < 3; ++gi) {
      ex.entries[u][std::size_t(gi)][0] =
          explore_adjacency(*graphs[gi], seeds, tau);
      ex.entries[u][std::size_t(gi)][1] =
          explore_walks(*tables[gi], seeds, tau);
    }
  }
  return ex;
}

// ------------------------------------------------------------------------ io

void WalkTable::save(std::ostream& os) const {
  os << graph_kind_name(kind) << ' ' << mu << ' ' << beta << ' '
     << steps.size() << '\n';
  for (std::size_t v = 0; v < steps.size(); ++v) {
    os << v << ':';
    for (std::size_t i = 0; i < steps[v].size(); ++i) {
      os << (i == 0 ? ' ' : ',') << steps[v][i];
    }
    os << '\n';
  }
}

WalkTable WalkTable::load(std::istream& is) {
  WalkTable wt;
  std::string kind_name;
  std::size_t n;
  if (!(is >> kind_name >> wt.mu >> wt.beta >> n)) {
    throw std::runtime_error("walk table: bad header");
  }
  if (kind_name == "spatial") wt.kind = GraphKind::spatial;
  else if (kind_name == "temporal") wt.kind = GraphKind::temporal;
  else if (kind_name == "preference") wt.kind = GraphKind::preference;
  else throw std::runtime_error("walk table: unexpected kind " + kind_name);
  wt.steps.resize(n);
  std::string line;
  std::getline(is, line);
  for (std::size_t v = 0; v < n; ++v) {
    if (!std::getline(is, line)) {
      throw std::runtime_error("walk table: truncated");
    }
    const std::size_t colon = line.find(':');
    auto& rec = wt.steps[v];
    std::stringstream ss(line.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) rec.push_back(std::stoi(tok));
    }
  }
  return wt;
}

namespace {
const char* stp_graph_name(int gi) {
  switch (gi) {
    case 0: return "spatial";
    case 1: return "temporal";
    default: return "preference";
  }
}
}  // namespace

void Explorations::save(std::ostream& os) const {
  for (std::size_t u = 0; u < entries.size(); ++u) {
    for (int gi = 0; gi < 3; ++gi) {
      for (int oi = 0; oi < 2; ++oi) {
        os << u << '\t' << stp_graph_name(gi) << '\t'
           << (oi == 0 ? "A" : "RW") << '\t';
        const auto& list = entries[u][std::size_t(gi)][std::size_t(oi)];
        for (std::size_t i = 0; i < list.size(); ++i) {
          if (i) os << ',';
          os << list[i];
        }
        os << '\n';
      }
    }
  }
}

Explorations Explorations::load(std::istream& is, std::size_t num_users) {
  Explorations ex;
  ex.entries.resize(num_users);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string user_s, graph_s, opt_s, list_s;
    std::getline(ss, user_s, '\t');
    std::getline(ss, graph_s, '\t');
    std::getline(ss, opt_s, '\t');
    std::getline(ss, list_s, '\t');
    const std::size_t u = std::stoul(user_s);
    if (u >= num_users) throw std::runtime_error("explorations: bad user");
    int gi = graph_s == "spatial" ? 0 : graph_s == "temporal" ? 1 : 2;
    int oi = opt_s == "A" ? 0 : 1;
    auto& list = ex.entries[u][std::size_t(gi)][std::size_t(oi)];
    std::stringstream ls(list_s);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      if (!tok.empty()) list.push_back(std::stoi(tok));
    }
  }
  return ex;
}

}  // namespace stpudgat
