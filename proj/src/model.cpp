#include "stpudgat/model.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace stpudgat {

namespace {
constexpr double kLeakySlope = 0.2;
constexpr double kEmbeddingInitRange = 0.05;

const char* kStpNames[3] = {"S", "T", "P"};
}  // namespace

void HyperParams::validate() const {
  if (dim != delta) {
    throw std::invalid_argument("HyperParams: dim must equal delta");
  }
  if (dim < 1) throw std::invalid_argument("HyperParams: dim must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("HyperParams: dropout_rate must be in [0,1)");
  }
  if (!explore_enabled && !exploit_enabled) {
    throw std::invalid_argument(
        "HyperParams: at least one of explore/exploit must be enabled");
  }
  if (explore_enabled && !any_graph_enabled()) {
    throw std::invalid_argument(
        "HyperParams: explore enabled but no STP graph enabled");
  }
  if (explore_enabled && !option_a && !option_rw) {
    throw std::invalid_argument(
        "HyperParams: explore enabled but no option enabled");
  }
}

// ------------------------------------------------------------------- params

namespace {

DgatLayerParams make_layer(ParamStore& store, const std::string& name,
                           const HyperParams& hp) {
  const auto dim = std::size_t(hp.dim);
  const auto delta = std::size_t(hp.delta);
  const std::size_t att_width =
      hp.attention_mode == AttentionMode::dimensional ? delta : 1;
  DgatLayerParams layer;
  layer.w_p = store.create(name + ".w_p", dim, delta);
  layer.w_a = store.create(name + ".w_a", 2 * delta, att_width);
  layer.b_a = store.create(name + ".b_a", 1, att_width);
  return layer;
}

std::size_t output_input_width(const HyperParams& hp) {
  return hp.user_module == UserModule::off ? std::size_t(hp.delta)
                                           : 2 * std::size_t(hp.delta);
}

void wire_layers(ModelParams& mp, const HyperParams& hp, bool create,
                 std::uint64_t seed) {
  auto& store = mp.store;
  std::mt19937_64 rng(seed);
  auto layer = [&](const std::string& name) -> DgatLayerParams {
    if (create) {
      DgatLayerParams l = make_layer(store, name, hp);
      glorot_init(*l.w_p, rng);
      glorot_init(*l.w_a, rng);
      // b_a starts at zero
      return l;
    }
    DgatLayerParams l;
    l.w_p = store.find(name + ".w_p");
    l.w_a = store.find(name + ".w_a");
    l.b_a = store.find(name + ".b_a");
    if (!l.w_p || !l.w_a || !l.b_a) {
      throw TrainingError("checkpoint missing layer '" + name + "'");
    }
    return l;
  };
  auto matrix = [&](const std::string& name, std::size_t r,
                    std::size_t c) -> Param* {
    if (create) {
      Param* p = store.create(name, r, c);
      glorot_init(*p, rng);
      return p;
    }
    Param* p = store.find(name);
    if (!p) throw TrainingError("checkpoint missing parameter '" + name + "'");
    return p;
  };

  const auto dim = std::size_t(hp.dim);
  const auto delta = std::size_t(hp.delta);

  // Only the parameter groups the active configuration reads are created;
  // dead layers would otherwise still cost Adam updates every step.
  if (create) {
    mp.poi_table = store.create("poi_table", mp.num_pois, dim);
    uniform_init(mp.poi_table->value, kEmbeddingInitRange, rng);
  } else {
    mp.poi_table = store.find("poi_table");
    if (!mp.poi_table) throw TrainingError("checkpoint missing poi_table");
  }
  if (hp.user_module != UserModule::off) {
    if (create) {
      mp.user_table = store.create("user_table", mp.num_users, dim);
      uniform_init(mp.user_table->value, kEmbeddingInitRange, rng);
    } else {
      mp.user_table = store.find("user_table");
      if (!mp.user_table) throw TrainingError("checkpoint missing user_table");
    }
  }

  const bool enabled[3] = {hp.graph_s, hp.graph_t, hp.graph_p};
  if (hp.exploit_enabled) mp.pp = layer("pp");
  if (hp.explore_enabled) {
    for (int gi = 0; gi < 3; ++gi) {
      if (!enabled[gi]) continue;
      if (hp.option_a) {
        mp.explore[std::size_t(gi)][0] =
            layer(std::string("explore_") + kStpNames[gi] + "_A");
      }
      if (hp.option_rw) {
        mp.explore[std::size_t(gi)][1] =
            layer(std::string("explore_") + kStpNames[gi] + "_RW");
      }
    }
    if (hp.option_a && hp.option_rw) {
      mp.w_f2 = matrix("w_f2", 2 * delta, delta);
    }
    if (hp.exploit_enabled) mp.w_f3 = matrix("w_f3", 2 * delta, delta);
  }
  if (hp.user_module == UserModule::udgat) mp.user = layer("user");
  mp.w_f1 = matrix("w_f1", output_input_width(hp), mp.num_pois);
}

}  // namespace

ModelParams ModelParams::init(std::size_t num_pois, std::size_t num_users,
                              const HyperParams& hp, std::uint64_t seed) {
  hp.validate();
  ModelParams mp;
  mp.num_pois = num_pois;
  mp.num_users = num_users;
  wire_layers(mp, hp, /*create=*/true, seed);
  return mp;
}

void ModelParams::rebind(const HyperParams& hp) {
  hp.validate();
  wire_layers(*this, hp, /*create=*/false, 0);
}

// --------------------------------------------------------------------- layer

std::vector<double> LayerAttention::summary() const {
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < width; ++j) acc += coeffs[i * width + j];
    out[i] = acc / double(width);
  }
  return out;
}

Tape::Id dgat_layer(Tape& tape, const DgatLayerParams& layer,
                    AttentionMode mode, Tape::Id center, Tape::Id neighbors,
                    LayerAttention* att) {
  const std::size_t n = tape.at(neighbors).rows;
  if (n == 0) throw ShapeError("dgat_layer: empty neighborhood");

  const Tape::Id w_p = tape.leaf(*layer.w_p);
  const Tape::Id w_a = tape.leaf(*layer.w_a);
  const Tape::Id b_a = tape.leaf(*layer.b_a);

  const Tape::Id projected = tape.matmul(neighbors, w_p);        // n x delta
  const Tape::Id proj_center = tape.matmul(center, w_p);         // 1 x delta
  const Tape::Id center_rows = tape.repeat_rows(proj_center, n); // n x delta
  const Tape::Id paired = tape.concat_cols(center_rows, projected);
  const Tape::Id scores = tape.leaky_relu(
      tape.add_row_bias(tape.matmul(paired, w_a), b_a), kLeakySlope);
  const Tape::Id alpha = tape.softmax_over_neighbors(scores);

  if (att) {
    const auto& node = tape.at(alpha);
    att->n = node.rows;
    att->width = node.cols;
    att->coeffs.assign(node.val.begin(), node.val.end());
  }

  const Tape::Id weighted = mode == AttentionMode::dimensional
                                ? tape.hadamard(alpha, projected)
                                : tape.scale_rows(projected, alpha);
  return tape.sum_rows(weighted);
}

// ------------------------------------------------------------------- forward

namespace {

// Exploration DGAT input: the previous POI is the center; the neighbor set
// is the open exploration neighborhood, falling back to {prev} when empty.
Tape::Id explore_layer(Tape& tape, ModelParams& params,
                       const HyperParams& hp, int gi, int oi, int prev_poi,
                       const std::vector<int>& exploration, Tape::Id center,
                       ForwardTrace& trace) {
  const std::vector<int> fallback{prev_poi};
  const std::vector<int>& nb_ids = exploration.empty() ? fallback : exploration;
  const Tape::Id nb_emb = tape.embedding_lookup(*params.poi_table, nb_ids);
  LayerAttention att;
  att.layer_name = std::string("explore_") + kStpNames[gi] +
                   (oi == 0 ? "_A" : "_RW");
  att.neighbor_ids = nb_ids;
  const Tape::Id out =
      dgat_layer(tape, params.explore[std::size_t(gi)][std::size_t(oi)],
                 hp.attention_mode, center, nb_emb, &att);
  trace.layers.push_back(std::move(att));
  return out;
}

}  // namespace

ForwardTrace forward(Tape& tape, ModelParams& params, const HyperParams& hp,
                     int user_index, int prev_poi_index, int target,
                     const SampleNeighborhoods& nb, bool train_mode,
                     std::mt19937_64& rng) {
  hp.validate();
  ForwardTrace trace;

  const std::vector<int> prev_ids{prev_poi_index};
  const Tape::Id prev_emb = tape.embedding_lookup(*params.poi_table, prev_ids);

  // Exploit path: PP DGAT over the user's full train POI set.
  Tape::Id exploit = -1;
  if (hp.exploit_enabled) {
    if (nb.pp_closed.empty()) {
      throw ShapeError("forward: empty PP neighborhood");
    }
    const Tape::Id pp_emb =
        tape.embedding_lookup(*params.poi_table, nb.pp_closed);
    LayerAttention att;
    att.layer_name = "pp";
    att.neighbor_ids = nb.pp_closed;
    exploit = dgat_layer(tape, params.pp, hp.attention_mode, prev_emb, pp_emb,
                         &att);
    trace.layers.push_back(std::move(att));
    if (hp.skip_connection) {
      exploit = tape.add(exploit, prev_emb);
    }
  }

  // Explore path: per-graph DGAT layers mean-pooled per option, options
  // fused by w_f2 (bypassed when only one option is enabled).
  Tape::Id explore = -1;
  if (hp.explore_enabled) {
    const bool enabled[3] = {hp.graph_s, hp.graph_t, hp.graph_p};
    auto pool_option = [&](int oi) {
      std::vector<Tape::Id> outs;
      for (int gi = 0; gi < 3; ++gi) {
        if (!enabled[gi]) continue;
        outs.push_back(explore_layer(
            tape, params, hp, gi, oi, prev_poi_index,
            nb.explore[std::size_t(gi)][std::size_t(oi)], prev_emb, trace));
      }
      return tape.mean_over(outs);
    };
    if (hp.option_a && hp.option_rw) {
      const Tape::Id o_a = pool_option(0);
      const Tape::Id o_rw = pool_option(1);
      explore = tape.matmul(tape.concat_cols(o_a, o_rw),
                            tape.leaf(*params.w_f2));
    } else {
      explore = pool_option(hp.option_a ? 0 : 1);
    }
  }

  // Explore-exploit fusion.
  Tape::Id y;
  if (exploit >= 0 && explore >= 0) {
    y = tape.matmul(tape.concat_cols(exploit, explore),
                    tape.leaf(*params.w_f3));
  } else {
    y = exploit >= 0 ? exploit : explore;
  }

  // User path.
  Tape::Id final_rep = y;
  if (hp.user_module == UserModule::udgat) {
    if (nb.user_closed.empty()) {
      throw ShapeError("forward: empty user neighborhood");
    }
    const std::vector<int> self{user_index};
    const Tape::Id self_emb =
        tape.embedding_lookup(*params.user_table, self);
    const Tape::Id nb_emb =
        tape.embedding_lookup(*params.user_table, nb.user_closed);
    LayerAttention att;
    att.layer_name = "user";
    att.neighbor_ids = nb.user_closed;
    const Tape::Id u = dgat_layer(tape, params.user, hp.attention_mode,
                                  self_emb, nb_emb, &att);
    trace.layers.push_back(std::move(att));
    final_rep = tape.concat_cols(y, u);
  } else if (hp.user_module == UserModule::raw_embedding) {
    const std::vector<int> self{user_index};
    final_rep = tape.concat_cols(
        y, tape.embedding_lookup(*params.user_table, self));
  }

  const Tape::Id dropped =
      tape.dropout(final_rep, hp.dropout_rate, train_mode, rng);
  const Tape::Id logits = tape.matmul(dropped, tape.leaf(*params.w_f1));
  trace.logits = logits;
  trace.probs = tape.softmax_values(logits);
  if (target >= 0) {
    trace.loss = tape.cross_entropy(logits, target);
  }
  return trace;
}

void export_attention(std::ostream& os, const std::string& sample_id,
                      const ForwardTrace& trace) {
  os.precision(12);
  for (const LayerAttention& layer : trace.layers) {
    const std::vector<double> coeff = layer.summary();
    for (std::size_t i = 0; i < layer.neighbor_ids.size(); ++i) {
      os << sample_id << '\t' << layer.layer_name << '\t'
         << layer.neighbor_ids[i] << '\t' << coeff[i] << '\n';
    }
  }
}

}  // namespace stpudgat
