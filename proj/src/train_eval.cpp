#include "stpudgat/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>

namespace stpudgat {

std::vector<SampleNeighborhoods> build_user_neighborhoods(
    const Dataset& ds, const WeightedGraph& user_graph,
    const Explorations& explorations) {
  std::vector<SampleNeighborhoods> out(ds.num_users());
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    SampleNeighborhoods& nb = out[u];
    // PP graph is complete over the user's distinct train POIs, so the
    // closed neighborhood of any of them is the whole vertex set.
    std::vector<int> seq = ds.train_seq(u);
    std::sort(seq.begin(), seq.end());
    seq.erase(std::unique(seq.begin(), seq.end()), seq.end());
    nb.pp_closed = std::move(seq);
    nb.explore = explorations.entries[u];
    nb.user_closed = user_graph.closed_neighborhood(int(u));
  }
  return out;
}

std::vector<LossCurvePoint> train(const Dataset& ds,
                                  const std::vector<SampleNeighborhoods>& nbs,
                                  ModelParams& params, const HyperParams& hp,
                                  const TrainConfig& tc, Adam& adam) {
  hp.validate();

  // Every consecutive pair within each user's train sequence.
  struct Sample {
    int user, prev, target;
  };
  std::vector<Sample> samples;
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    const auto& visits = ds.train_visits[u];
    for (std::size_t i = 0; i + 1 < visits.size(); ++i) {
      samples.push_back({int(u), visits[i].poi, visits[i + 1].poi});
    }
  }

  std::mt19937_64 shuffle_rng(tc.rng_seed);
  std::mt19937_64 dropout_rng(tc.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<LossCurvePoint> curve;
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const double lr =
        epoch >= tc.decay_epoch ? tc.lr_after_decay : tc.lr_initial;
    adam.set_learning_rate(lr);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Sample& s = samples[order[k]];
      Tape tape;
      params.store.zero_grad();
      ForwardTrace trace =
          forward(tape, params, hp, s.user, s.prev, s.target,
                  nbs[std::size_t(s.user)], /*train_mode=*/true, dropout_rng);
      const double loss = tape.values(trace.loss)[0];
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " +
                            std::to_string(epoch) + ", sample " +
                            std::to_string(k));
      }
      loss_sum += loss;
      tape.backward(trace.loss);
      adam.step(params.store);
    }
    const double mean_loss =
        samples.empty() ? 0.0 : loss_sum / double(samples.size());
    curve.push_back({epoch, mean_loss, lr});

    if (tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0 &&
        !tc.checkpoint_path.empty()) {
      std::ofstream os(tc.checkpoint_path, std::ios::binary);
      save_checkpoint(os, params.store, &adam);
    }
  }
  return curve;
}

std::size_t rank_of_target(std::span<const double> scores, int target) {
  const double ts = scores[std::size_t(target)];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > ts) ++rank;
    else if (scores[j] == ts && int(j) < target) ++rank;
  }
  return rank;
}

void MetricAccumulator::add_rank(std::size_t rank) {
  ++count_;
  for (auto& [k, hits] : hits_) {
    if (rank <= std::size_t(k)) ++hits;
  }
  reciprocal_sum_ += 1.0 / double(rank);
}

EvalReport MetricAccumulator::report() const {
  EvalReport r;
  r.sample_count = count_;
  for (const auto& [k, hits] : hits_) {
    r.acc_at[k] = count_ == 0 ? 0.0 : double(hits) / double(count_);
  }
  r.map_score = count_ == 0 ? 0.0 : reciprocal_sum_ / double(count_);
  return r;
}

namespace {

template <typename PairSource>
EvalReport evaluate_pairs(ModelParams& params, const HyperParams& hp,
                          const Dataset& ds,
                          const std::vector<SampleNeighborhoods>& nbs,
                          PairSource pairs_of_user) {
  MetricAccumulator acc;
  std::vector<double> per_user_acc1;
  std::mt19937_64 dummy_rng(0);  // dropout is identity in eval mode
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    std::size_t user_hits = 0, user_count = 0;
    for (const auto& [prev, target] : pairs_of_user(u)) {
      Tape tape;
      ForwardTrace trace = forward(tape, params, hp, int(u), prev, -1,
                                   nbs[u], /*train_mode=*/false, dummy_rng);
      const std::size_t rank = rank_of_target(trace.probs, target);
      acc.add_rank(rank);
      ++user_count;
      if (rank == 1) ++user_hits;
    }
    per_user_acc1.push_back(
        user_count == 0 ? 0.0 : double(user_hits) / double(user_count));
  }
  EvalReport r = acc.report();
  r.per_user_acc1 = std::move(per_user_acc1);
  return r;
}

}  // namespace

EvalReport evaluate(ModelParams& params, const HyperParams& hp,
                    const Dataset& ds,
                    const std::vector<SampleNeighborhoods>& nbs) {
  return evaluate_pairs(params, hp, ds, nbs, [&](std::size_t u) {
    std::vector<std::pair<int, int>> pairs;
    for (const TestPair& t : ds.test_pairs[u]) {
      pairs.emplace_back(t.prev_poi, t.target_poi);
    }
    return pairs;
  });
}

EvalReport evaluate_on_train(ModelParams& params, const HyperParams& hp,
                             const Dataset& ds,
                             const std::vector<SampleNeighborhoods>& nbs) {
  return evaluate_pairs(params, hp, ds, nbs, [&](std::size_t u) {
    std::vector<std::pair<int, int>> pairs;
    const auto& visits = ds.train_visits[u];
    for (std::size_t i = 0; i + 1 < visits.size(); ++i) {
      pairs.emplace_back(visits[i].poi, visits[i + 1].poi);
    }
    return pairs;
  });
}

// ----------------------------------------------------------------- baselines

namespace {

// Scores from frequency counts: higher count ranks first; ranking ties by
// ascending POI index are handled by rank_of_target.
EvalReport score_fixed_rankings(
    const Dataset& ds,
    const std::function<std::vector<double>(std::size_t)>& scores_for_user) {
  MetricAccumulator acc;
  for (std::size_t u = 0; u < ds.num_users(); ++u) {
    const std::vector<double> scores = scores_for_user(u);
    for (const TestPair& t : ds.test_pairs[u]) {
      acc.add_rank(rank_of_target(scores, t.target_poi));
    }
  }
  return acc.report();
}

}  // namespace

EvalReport baseline_top(const Dataset& ds) {
  std::vector<double> global(ds.num_pois(), 0.0);
  for (const auto& seq : ds.train_visits) {
    for (const TrainVisit& v : seq) global[std::size_t(v.poi)] += 1.0;
  }
  return score_fixed_rankings(ds, [&](std::size_t) { return global; });
}

EvalReport baseline_utop(const Dataset& ds) {
  std::vector<double> global(ds.num_pois(), 0.0);
  double max_global = 0.0;
  for (const auto& seq : ds.train_visits) {
    for (const TrainVisit& v : seq) {
      global[std::size_t(v.poi)] += 1.0;
      max_global = std::max(max_global, global[std::size_t(v.poi)]);
    }
  }
  return score_fixed_rankings(ds, [&](std::size_t u) {
    // The user's own frequencies dominate; POIs outside the user's history
    // fall back to global-frequency order strictly below every visited POI.
    std::vector<double> scores(ds.num_pois());
    for (std::size_t p = 0; p < scores.size(); ++p) {
      scores[p] = global[p] / (max_global + 1.0);
    }
    std::vector<double> own(ds.num_pois(), 0.0);
    for (const TrainVisit& v : ds.train_visits[u]) {
      own[std::size_t(v.poi)] += 1.0;
    }
    for (std::size_t p = 0; p < scores.size(); ++p) {
      if (own[p] > 0.0) scores[p] = 1.0 + own[p];
    }
    return scores;
  });
}

// ----------------------------------------------------------------------- io

void EvalReport::write(std::ostream& os) const {
  os.precision(6);
  os << std::fixed;
  os << "samples\t" << sample_count << '\n';
  for (const auto& [k, v] : acc_at) {
    os << "acc@" << k << '\t' << v << '\n';
  }
  os << "map\t" << map_score << '\n';
}

void write_loss_curve(std::ostream& os,
                      const std::vector<LossCurvePoint>& curve) {
  os << "epoch,mean_loss,learning_rate\n";
  os.precision(12);
  for (const LossCurvePoint& p : curve) {
    os << p.epoch << ',' << p.mean_loss << ',' << p.learning_rate << '\n';
  }
}

}  // namespace stpudgat
