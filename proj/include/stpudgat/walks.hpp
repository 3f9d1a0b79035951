#pragma once
// Weighted random walks over the STP graphs and per-user exploration
// neighborhoods (adjacency option A and random-walk option RW).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stpudgat/graphs.hpp"

namespace stpudgat {

struct WalkConfig {
  int mu = 5;    // walks per vertex
  int beta = 5;  // steps recorded per walk
  int tau = 23;  // new-neighbor budget
  std::uint64_t rng_seed = 0;
};

struct WalkTable {
  GraphKind kind;
  int mu = 0;
  int beta = 0;
  // steps[v] holds mu*beta recorded vertices, walk-major. The start vertex
  // itself is not recorded; isolated vertices repeat themselves.
  std::vector<std::vector<int>> steps;

  std::size_t total_recorded_steps() const;
  void save(std::ostream& os) const;
  static WalkTable load(std::istream& is);
};

// Weight-proportional random walks, mu per vertex, beta steps each.
// Deterministic given cfg.rng_seed (per-vertex sub-seeds are derived by
// mixing the seed with the vertex index).
WalkTable run_walks(const WeightedGraph& g, const WalkConfig& cfg);

// Option A: frequency-ranked closed-neighborhood candidates minus the
// user's own train POIs, top tau. Ties break by ascending POI index.
std::vector<int> explore_adjacency(const WeightedGraph& g,
                                   std::span<const int> user_train_pois,
                                   int tau);

// Option RW: same ranking over the recorded walk steps of the seed POIs.
std::vector<int> explore_walks(const WalkTable& wt,
                               std::span<const int> user_train_pois, int tau);

enum class StpGraph : int { spatial = 0, temporal = 1, preference = 2 };
enum class ExploreOption : int { adjacency = 0, walk = 1 };

// Per-user, per-STP-graph, per-option exploration neighborhoods,
// precomputed once (the graphs are static across epochs).
struct Explorations {
  // entries[user][graph][option]
  std::vector<std::array<std::array<std::vector<int>, 2>, 3>> entries;

  const std::vector<int>& get(std::size_t user, StpGraph g,
                              ExploreOption o) const {
    return entries[user][std::size_t(g)][std::size_t(o)];
  }
  void save(std::ostream& os) const;  // inspection TSV
  static Explorations load(std::istream& is, std::size_t num_users);
};

Explorations compute_explorations(const Dataset& ds,
                                  const WeightedGraph& spatial,
                                  const WeightedGraph& temporal,
                                  const WeightedGraph& preference,
                                  const WalkTable& spatial_walks,
                                  const WalkTable& temporal_walks,
                                  const WalkTable& preference_walks, int tau);

}  // namespace stpudgat
