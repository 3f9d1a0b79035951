#pragma once
// The DGAT layer and the composed explore-exploit architecture, with
// toggles for every reported variant (scalar vs dimensional attention,
// A/RW options, per-graph enabling, user module modes, skip connection).

#include <array>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "stpudgat/tensor.hpp"
#include "stpudgat/walks.hpp"

namespace stpudgat {

enum class AttentionMode { scalar, dimensional };
enum class UserModule { off, udgat, raw_embedding };

struct HyperParams {
  int dim = 1024;
  int delta = 1024;  // must equal dim
  int tau = 23;
  int mu = 5;
  int beta = 5;
  int sigma = 5;
  double dropout_rate = 0.95;
  AttentionMode attention_mode = AttentionMode::dimensional;
  bool option_a = true;
  bool option_rw = true;
  bool graph_s = true;
  bool graph_t = true;
  bool graph_p = true;
  bool explore_enabled = true;
  bool exploit_enabled = true;
  UserModule user_module = UserModule::udgat;
  bool skip_connection = false;

  void validate() const;
  bool any_graph_enabled() const { return graph_s || graph_t || graph_p; }
};

// One DGAT layer's learnables: input projection, attention projection, bias.
struct DgatLayerParams {
  Param* w_p = nullptr;  // dim x delta
  Param* w_a = nullptr;  // 2*delta x delta (dimensional) or 2*delta x 1
  Param* b_a = nullptr;  // 1 x delta or 1 x 1
};

struct ModelParams {
  ParamStore store;
  Param* poi_table = nullptr;   // |V| x dim
  Param* user_table = nullptr;  // |U| x dim
  DgatLayerParams pp;
  // explore[graph][option]: graph in {S,T,P}, option in {A,RW}
  std::array<std::array<DgatLayerParams, 2>, 3> explore;
  DgatLayerParams user;
  Param* w_f1 = nullptr;  // (2*delta or delta) x |V|
  Param* w_f2 = nullptr;  // 2*delta x delta
  Param* w_f3 = nullptr;  // 2*delta x delta

  std::size_t num_pois = 0;
  std::size_t num_users = 0;

  static ModelParams init(std::size_t num_pois, std::size_t num_users,
                          const HyperParams& hp, std::uint64_t seed);
  // Rebuilds the layer pointers after load_checkpoint into `store`.
  void rebind(const HyperParams& hp);
};

// Attention coefficients captured from one layer during a forward pass.
struct LayerAttention {
  std::string layer_name;
  std::vector<int> neighbor_ids;
  std::size_t n = 0;      // neighbors
  std::size_t width = 0;  // delta (dimensional) or 1 (scalar)
  std::vector<double> coeffs;  // n x width

  // Mean over dimensions (dimensional mode) or the scalar coefficient.
  std::vector<double> summary() const;
};

struct ForwardTrace {
  std::vector<LayerAttention> layers;
  std::vector<double> probs;  // over |V|
  Tape::Id loss = -1;         // valid when a target was supplied
  Tape::Id logits = -1;
};

// Neighborhood inputs for one sample, all precomputable per user.
struct SampleNeighborhoods {
  std::vector<int> pp_closed;  // the user's distinct train POIs
  // [graph][option] exploration lists; empty lists fall back to {prev POI}.
  std::array<std::array<std::vector<int>, 2>, 3> explore;
  std::vector<int> user_closed;  // user plus adjacent users
};

// One DGAT layer on an existing tape. `center` is (1 x dim), `neighbors`
// is (n x dim). Returns the (1 x delta) output; fills `att` if non-null.
Tape::Id dgat_layer(Tape& tape, const DgatLayerParams& layer,
                    AttentionMode mode, Tape::Id center, Tape::Id neighbors,
                    LayerAttention* att);

// Full forward pass for one (user, previous POI) query. When target >= 0
// the trace carries a cross-entropy loss node ready for backward().
ForwardTrace forward(Tape& tape, ModelParams& params, const HyperParams& hp,
                     int user_index, int prev_poi_index, int target,
                     const SampleNeighborhoods& nb, bool train_mode,
                     std::mt19937_64& rng);

// TSV rows: sample_id, layer_name, neighbor_id, coefficient.
void export_attention(std::ostream& os, const std::string& sample_id,
                      const ForwardTrace& trace);

}  // namespace stpudgat
