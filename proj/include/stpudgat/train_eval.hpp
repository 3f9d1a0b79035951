#pragma once
// Training loop (batch size 1, Adam, stepped learning rate), ranking
// metrics and the frequency baselines.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "stpudgat/model.hpp"

namespace stpudgat {

struct TrainConfig {
  int epochs = 100;
  double lr_initial = 0.001;
  double lr_after_decay = 0.0001;
  int decay_epoch = 10;  // 1-based; lr switches at the start of this epoch
  std::uint64_t rng_seed = 0;
  int checkpoint_every = 0;  // 0 = never
  std::string checkpoint_path;
};

struct EvalReport {
  std::map<int, double> acc_at;  // K in {1,5,10,20}
  double map_score = 0.0;
  std::size_t sample_count = 0;
  std::vector<double> per_user_acc1;

  void write(std::ostream& os) const;
};

struct LossCurvePoint {
  int epoch;
  double mean_loss;
  double learning_rate;
};

// Per-user neighborhood bundles, shared by training and evaluation.
// Precomputed once; the graphs are static across epochs.
std::vector<SampleNeighborhoods> build_user_neighborhoods(
    const Dataset& ds, const WeightedGraph& user_graph,
    const Explorations& explorations);

std::vector<LossCurvePoint> train(const Dataset& ds,
                                  const std::vector<SampleNeighborhoods>& nbs,
                                  ModelParams& params, const HyperParams& hp,
                                  const TrainConfig& tc, Adam& adam);

EvalReport evaluate(ModelParams& params, const HyperParams& hp,
                    const Dataset& ds,
                    const std::vector<SampleNeighborhoods>& nbs);

// Same forward pass, scored against the training pairs (capacity checks).
EvalReport evaluate_on_train(ModelParams& params, const HyperParams& hp,
                             const Dataset& ds,
                             const std::vector<SampleNeighborhoods>& nbs);

// Rank of the target (1-based) in a descending score ordering; exact score
// ties resolve by ascending POI index.
std::size_t rank_of_target(std::span<const double> scores, int target);

// Metric accumulator: Acc@K for K in {1,5,10,20} plus MAP (one relevant
// item per query, so AP = 1/rank).
class MetricAccumulator {
 public:
  void add_rank(std::size_t rank);
  EvalReport report() const;

 private:
  std::size_t count_ = 0;
  std::map<int, std::size_t> hits_{{1, 0}, {5, 0}, {10, 0}, {20, 0}};
  double reciprocal_sum_ = 0.0;
};

EvalReport baseline_top(const Dataset& ds);
EvalReport baseline_utop(const Dataset& ds);

void write_loss_curve(std::ostream& os,
                      const std::vector<LossCurvePoint>& curve);

}  // namespace stpudgat
