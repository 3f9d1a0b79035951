#pragma once
// The five undirected weighted graphs the model reads: per-user
// personalized-preference graphs plus global spatial, temporal, preference
// and user-user graphs.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stpudgat/dataset.hpp"

namespace stpudgat {

enum class GraphKind { pp, spatial, temporal, preference, user };
enum class VertexDomain { poi, user };

const char* graph_kind_name(GraphKind k);

struct GraphConfig {
  int sigma = 5;                   // nearest POIs for the spatial graph
  double jaccard_threshold = 0.2;  // user-user edge cutoff
  bool haversine = false;          // spatial distance in km instead of degrees
};

class WeightedGraph {
 public:
  WeightedGraph(GraphKind kind, VertexDomain domain, std::size_t num_vertices)
      : kind_(kind), domain_(domain), adj_(num_vertices) {}

  GraphKind kind() const { return kind_; }
  VertexDomain domain() const { return domain_; }
  std::size_t num_vertices() const { return adj_.size(); }

  // Symmetric insert; i != j, w > 0. Overwrites an existing edge's weight.
  void add_edge(int i, int j, double w);
  bool has_edge(int i, int j) const;
  double edge_weight(int i, int j) const;  // 0 when absent
  std::span<const std::pair<int, double>> neighbors(int v) const {
    return adj_[std::size_t(v)];
  }
  std::size_t num_edges() const;
  double total_edge_weight() const;

  // v followed by its neighbors in ascending vertex index.
  std::vector<int> closed_neighborhood(int v) const;

  // Text edge list: kind, num_vertices, then `i j w` with i < j.
  void save(std::ostream& os) const;
  static WeightedGraph load(std::istream& is);

 private:
  GraphKind kind_;
  VertexDomain domain_;
  // Neighbor lists kept sorted by vertex index.
  std::vector<std::vector<std::pair<int, double>>> adj_;
};

// Complete unit-weight graph over the distinct POIs of one train sequence.
// Vertex ids are global POI indices; only the listed POIs get edges.
WeightedGraph build_pp_graph(std::span<const int> train_seq,
                             std::size_t num_pois);

// Union of each POI's sigma nearest others; weight 1/distance, clamped at
// distance 1e-6 degrees.
WeightedGraph build_spatial_graph(
    std::span<const std::pair<double, double>> poi_coords,
    const GraphConfig& cfg);

// Chronological adjacency over all users' train visits merged; weight
// 1/mean(interval), mean clamped at 1 second.
WeightedGraph build_temporal_graph(const Dataset& ds);

// Consecutive distinct pairs within each user's train sequence; weight =
// unordered pair count.
WeightedGraph build_preference_graph(const Dataset& ds);

// Jaccard similarity of users' distinct train POI sets; edge when strictly
// above the threshold, weight = the coefficient.
WeightedGraph build_user_graph(const Dataset& ds, const GraphConfig& cfg);

}  // namespace stpudgat
