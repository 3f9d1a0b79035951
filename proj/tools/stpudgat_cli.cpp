// Pipeline driver: preprocess -> build-graphs -> walk -> train -> evaluate,
// plus the ablation grid and attention export. Every stage writes a
// manifest with its config hash and seed; downstream stages refuse to run
// against stale upstream artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stpudgat/dataset.hpp"
#include "stpudgat/graphs.hpp"
#include "stpudgat/model.hpp"
#include "stpudgat/train_eval.hpp"
#include "stpudgat/walks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stpudgat;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stage seeds derive from the master seed with fixed mixing constants, so
// changing one stage's config never reseeds another.
constexpr std::uint64_t kWalkSeedSalt = 0x77616c6b73ULL;   // "walks"
constexpr std::uint64_t kTrainSeedSalt = 0x747261696eULL;  // "train"
constexpr std::uint64_t kInitSeedSalt = 0x696e6974ULL;     // "init"

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_manifest(const fs::path& dir, const std::string& stage,
                    std::uint64_t config_hash, std::uint64_t seed,
                    std::uint64_t upstream_hash) {
  json m;
  m["stage"] = stage;
  m["config_hash"] = config_hash;
  m["seed"] = seed;
  m["upstream_hash"] = upstream_hash;
  std::ofstream os(dir / "manifest.json");
  os << m.dump(2) << '\n';
}

json read_manifest(const fs::path& dir, const std::string& what) {
  const fs::path path = dir / "manifest.json";
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("missing " + what + " artifacts: " +
                             path.string() +
                             " not found (run the earlier stage first)");
  }
  json m;
  is >> m;
  return m;
}

void check_upstream(const json& manifest, std::uint64_t expected,
                    const std::string& what) {
  if (manifest.at("upstream_hash").get<std::uint64_t>() != expected) {
    throw std::runtime_error("stale artifacts: " + what +
                             " was built against a different upstream config; "
                             "re-run the earlier stages");
  }
}

struct RunConfig {
  std::string input;
  std::string workspace;
  std::string variant = "stp-udgat";
  std::uint64_t seed = 0;
  // preprocess
  int min_users_per_poi = 10;
  int min_visits = 10;
  int max_visits = 30;
  double train_fraction = 0.7;
  bool cold_start = false;
  // graphs
  int sigma = 5;
  double jaccard = 0.2;
  bool haversine = false;
  // walks
  int mu = 5, beta = 5, tau = 23;
  // model/training
  int dim = 1024;
  int epochs = 100;
  double dropout = 0.95;
  double lr_initial = 0.001;
  double lr_after_decay = 0.0001;
  int decay_epoch = 10;
  std::string attention = "dimensional";
  std::string options = "A+RW";
  std::string graphs = "STP";
  bool explore = true;
  bool exploit_ = true;
  std::string user = "udgat";
  bool skip = false;
  int export_samples = 32;
};

std::string preprocess_config_string(const RunConfig& c) {
  std::ostringstream ss;
  ss << "preprocess|" << c.min_users_per_poi << '|' << c.min_visits << '|'
     << c.max_visits << '|' << c.train_fraction << '|' << c.cold_start;
  return ss.str();
}

std::string graphs_config_string(const RunConfig& c, std::uint64_t up) {
  std::ostringstream ss;
  ss << "graphs|" << c.sigma << '|' << c.jaccard << '|' << c.haversine << '|'
     << up;
  return ss.str();
}

std::string walks_config_string(const RunConfig& c, std::uint64_t up) {
  std::ostringstream ss;
  ss << "walks|" << c.mu << '|' << c.beta << '|' << c.tau << '|' << c.seed
     << '|' << up;
  return ss.str();
}

std::string train_config_string(const RunConfig& c, std::uint64_t up) {
  std::ostringstream ss;
  ss << "train|" << c.variant << '|' << c.dim << '|' << c.epochs << '|'
     << c.dropout << '|' << c.attention << '|' << c.options << '|' << c.graphs
     << '|' << c.explore << '|' << c.exploit_ << '|' << c.user << '|' << c.skip
     << '|' << c.seed << '|' << c.lr_initial << '|' << c.lr_after_decay << '|'
     << c.decay_epoch << '|' << up;
  return ss.str();
}

HyperParams hyper_params(const RunConfig& c) {
  HyperParams hp;
  hp.dim = hp.delta = c.dim;
  hp.tau = c.tau;
  hp.mu = c.mu;
  hp.beta = c.beta;
  hp.sigma = c.sigma;
  hp.dropout_rate = c.dropout;
  hp.attention_mode = c.attention == "scalar" ? AttentionMode::scalar
                                              : AttentionMode::dimensional;
  hp.option_a = c.options == "A" || c.options == "A+RW";
  hp.option_rw = c.options == "RW" || c.options == "A+RW";
  hp.graph_s = c.graphs.find('S') != std::string::npos;
  hp.graph_t = c.graphs.find('T') != std::string::npos;
  hp.graph_p = c.graphs.find('P') != std::string::npos;
  hp.explore_enabled = c.explore;
  hp.exploit_enabled = c.exploit_;
  hp.user_module = c.user == "udgat" ? UserModule::udgat
                   : c.user == "embed" ? UserModule::raw_embedding
                                       : UserModule::off;
  hp.skip_connection = c.skip;

  if (c.variant == "pp-dgat-skip") {
    hp.explore_enabled = false;
    hp.exploit_enabled = true;
    hp.user_module = UserModule::off;
    hp.skip_connection = true;
  } else if (c.variant == "stp-dgat") {
    hp.explore_enabled = hp.exploit_enabled = true;
    hp.option_a = hp.option_rw = true;
    hp.graph_s = hp.graph_t = hp.graph_p = true;
    hp.user_module = UserModule::off;
    hp.skip_connection = false;
  } else if (c.variant == "stp-udgat") {
    hp.explore_enabled = hp.exploit_enabled = true;
    hp.option_a = hp.option_rw = true;
    hp.graph_s = hp.graph_t = hp.graph_p = true;
    hp.user_module = UserModule::udgat;
    hp.skip_connection = false;
  }  // "custom" keeps the flags as given
  return hp;
}

// --------------------------------------------------------------- stage logic

void cmd_preprocess(const RunConfig& c) {
  std::ifstream is(c.input);
  if (!is) throw std::runtime_error("cannot open input log " + c.input);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::vector<CheckIn> checkins = parse_checkins(buf.str());

  Dataset ds;
  if (c.cold_start) {
    ds = cold_start_preprocess(checkins);
  } else {
    PreprocessConfig cfg;
    cfg.min_users_per_poi = c.min_users_per_poi;
    cfg.min_visits_per_user = c.min_visits;
    cfg.max_visits_per_user = c.max_visits;
    cfg.train_fraction = c.train_fraction;
    ds = preprocess(checkins, cfg);
  }
  const fs::path dir = fs::path(c.workspace) / "dataset";
  ds.save(dir.string());
  write_manifest(dir, "preprocess", fnv1a(preprocess_config_string(c)),
                 c.seed, 0);
  std::cout << "users\t" << ds.num_users() << "\npois\t" << ds.num_pois()
            << "\ntrain_visits\t" << ds.total_train_visits()
            << "\ntest_pairs\t" << ds.total_test_pairs() << '\n';
}

Dataset load_dataset_checked(const RunConfig& c, std::uint64_t* hash_out) {
  const fs::path dir = fs::path(c.workspace) / "dataset";
  const json m = read_manifest(dir, "dataset");
  if (hash_out) *hash_out = m.at("config_hash").get<std::uint64_t>();
  return Dataset::load(dir.string());
}

void save_graph(const WeightedGraph& g, const fs::path& path) {
  std::ofstream os(path);
  g.save(os);
}

WeightedGraph load_graph(const fs::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("missing graph file " + path.string() +
                             " (run build-graphs first)");
  }
  return WeightedGraph::load(is);
}

void cmd_build_graphs(const RunConfig& c) {
  std::uint64_t dataset_hash = 0;
  const Dataset ds = load_dataset_checked(c, &dataset_hash);
  GraphConfig gc;
  gc.sigma = c.sigma;
  gc.jaccard_threshold = c.jaccard;
  gc.haversine = c.haversine;

  const fs::path dir = fs::path(c.workspace) / "graphs";
  fs::create_directories(dir);
  save_graph(build_spatial_graph(ds.poi_coords, gc), dir / "spatial.txt");
  save_graph(build_temporal_graph(ds), dir / "temporal.txt");
  save_graph(build_preference_graph(ds), dir / "preference.txt");
  save_graph(build_user_graph(ds, gc), dir / "user.txt");
  write_manifest(dir, "build-graphs",
                 fnv1a(graphs_config_string(c, dataset_hash)), c.seed,
                 dataset_hash);
  std::cout << "graphs written to " << dir.string() << '\n';
}

void cmd_walk(const RunConfig& c) {
  std::uint64_t dataset_hash = 0;
  const Dataset ds = load_dataset_checked(c, &dataset_hash);
  const fs::path gdir = fs::path(c.workspace) / "graphs";
  const json gm = read_manifest(gdir, "graphs");
  check_upstream(gm, dataset_hash, "graphs");
  const std::uint64_t graphs_hash = gm.at("config_hash").get<std::uint64_t>();

  const WeightedGraph spatial = load_graph(gdir / "spatial.txt");
  const WeightedGraph temporal = load_graph(gdir / "temporal.txt");
  const WeightedGraph preference = load_graph(gdir / "preference.txt");

  WalkConfig wc;
  wc.mu = c.mu;
  wc.beta = c.beta;
  wc.tau = c.tau;
  wc.rng_seed = splitmix64(c.seed ^ kWalkSeedSalt);

  const fs::path dir = fs::path(c.workspace) / "walks";
  fs::create_directories(dir);
  const WalkTable ws = run_walks(spatial, wc);
  const WalkTable wt = run_walks(temporal, wc);
  const WalkTable wp = run_walks(preference, wc);
  {
    std::ofstream os(dir / "spatial.walks");
    ws.save(os);
  }
  {
    std::ofstream os(dir / "temporal.walks");
    wt.save(os);
  }
  {
    std::ofstream os(dir / "preference.walks");
    wp.save(os);
  }
  const Explorations ex = compute_explorations(ds, spatial, temporal,
                                               preference, ws, wt, wp, c.tau);
  {
    std::ofstream os(dir / "explorations.tsv");
    ex.save(os);
  }
  write_manifest(dir, "walk", fnv1a(walks_config_string(c, graphs_hash)),
                 wc.rng_seed, graphs_hash);
  std::cout << "walk tables and explorations written to " << dir.string()
            << '\n';
}

struct PipelineArtifacts {
  Dataset ds;
  WeightedGraph user_graph{GraphKind::user, VertexDomain::user, 0};
  Explorations explorations;
  std::vector<SampleNeighborhoods> neighborhoods;
  std::uint64_t walks_hash = 0;
};

PipelineArtifacts load_pipeline(const RunConfig& c) {
  PipelineArtifacts a;
  std::uint64_t dataset_hash = 0;
  a.ds = load_dataset_checked(c, &dataset_hash);

  const fs::path gdir = fs::path(c.workspace) / "graphs";
  const json gm = read_manifest(gdir, "graphs");
  check_upstream(gm, dataset_hash, "graphs");
  a.user_graph = load_graph(gdir / "user.txt");

  const fs::path wdir = fs::path(c.workspace) / "walks";
  const json wm = read_manifest(wdir, "walks");
  check_upstream(wm, gm.at("config_hash").get<std::uint64_t>(), "walks");
  a.walks_hash = wm.at("config_hash").get<std::uint64_t>();

  std::ifstream is(wdir / "explorations.tsv");
  if (!is) {
    throw std::runtime_error("missing " + (wdir / "explorations.tsv").string() +
                             " (run walk first)");
  }
  a.explorations = Explorations::load(is, a.ds.num_users());
  a.neighborhoods =
      build_user_neighborhoods(a.ds, a.user_graph, a.explorations);
  return a;
}

void run_training(const RunConfig& c, const PipelineArtifacts& a,
                  const HyperParams& hp, const fs::path& outdir) {
  ModelParams params = ModelParams::init(a.ds.num_pois(), a.ds.num_users(),
                                         hp, splitmix64(c.seed ^ kInitSeedSalt));
  Adam adam;
  TrainConfig tc;
  tc.epochs = c.epochs;
  tc.lr_initial = c.lr_initial;
  tc.lr_after_decay = c.lr_after_decay;
  tc.decay_epoch = c.decay_epoch;
  tc.rng_seed = splitmix64(c.seed ^ kTrainSeedSalt);

  const auto curve = train(a.ds, a.neighborhoods, params, hp, tc, adam);

  fs::create_directories(outdir);
  {
    std::ofstream os(outdir / "model.ckpt", std::ios::binary);
    save_checkpoint(os, params.store, &adam);
  }
  {
    std::ofstream os(outdir / "loss_curve.csv");
    write_loss_curve(os, curve);
  }
}

void cmd_train(const RunConfig& c) {
  const PipelineArtifacts a = load_pipeline(c);
  const HyperParams hp = hyper_params(c);
  const fs::path dir = fs::path(c.workspace) / "model";
  run_training(c, a, hp, dir);
  write_manifest(dir, "train", fnv1a(train_config_string(c, a.walks_hash)),
                 c.seed, a.walks_hash);
  std::cout << "model written to " << (dir / "model.ckpt").string() << '\n';
}

ModelParams load_model_checked(const RunConfig& c, const PipelineArtifacts& a,
                               const HyperParams& hp) {
  const fs::path dir = fs::path(c.workspace) / "model";
  const json mm = read_manifest(dir, "model");
  check_upstream(mm, a.walks_hash, "model");
  std::ifstream is(dir / "model.ckpt", std::ios::binary);
  if (!is) {
    throw std::runtime_error("missing " + (dir / "model.ckpt").string() +
                             " (run train first)");
  }
  ModelParams mp;
  mp.num_pois = a.ds.num_pois();
  mp.num_users = a.ds.num_users();
  load_checkpoint(is, mp.store, nullptr);
  mp.rebind(hp);
  return mp;
}

void cmd_evaluate(const RunConfig& c, bool with_baselines) {
  const PipelineArtifacts a = load_pipeline(c);
  const HyperParams hp = hyper_params(c);
  ModelParams mp = load_model_checked(c, a, hp);

  const EvalReport report = evaluate(mp, hp, a.ds, a.neighborhoods);
  std::cout << "== model ==\n";
  report.write(std::cout);
  {
    std::ofstream os(fs::path(c.workspace) / "eval_report.txt");
    report.write(os);
  }
  if (with_baselines) {
    std::cout << "== TOP ==\n";
    baseline_top(a.ds).write(std::cout);
    std::cout << "== U-TOP ==\n";
    baseline_utop(a.ds).write(std::cout);
  }
}

void cmd_export_attention(const RunConfig& c) {
  const PipelineArtifacts a = load_pipeline(c);
  const HyperParams hp = hyper_params(c);
  ModelParams mp = load_model_checked(c, a, hp);

  const fs::path out = fs::path(c.workspace) / "attention.tsv";
  std::ofstream os(out);
  os << "sample_id\tlayer\tneighbor\tcoefficient\n";
  std::mt19937_64 rng(0);
  int written = 0;
  for (std::size_t u = 0; u < a.ds.num_users() && written < c.export_samples;
       ++u) {
    for (const TestPair& t : a.ds.test_pairs[u]) {
      if (written >= c.export_samples) break;
      Tape tape;
      const ForwardTrace trace =
          forward(tape, mp, hp, int(u), t.prev_poi, -1, a.neighborhoods[u],
                  /*train_mode=*/false, rng);
      export_attention(os, "u" + std::to_string(u) + "_s" +
                               std::to_string(written), trace);
      ++written;
    }
  }
  std::cout << written << " samples exported to " << out.string() << '\n';
}

void cmd_ablate(const RunConfig& base) {
  const PipelineArtifacts a = load_pipeline(base);
  const fs::path dir = fs::path(base.workspace) / "ablation";
  fs::create_directories(dir);

  struct Cell {
    std::string name;
    RunConfig cfg;
  };
  std::vector<Cell> grid;
  auto custom = [&](const std::string& name) {
    Cell cell{name, base};
    cell.cfg.variant = "custom";
    return cell;
  };
  // User-module comparison
  {
    Cell c = custom("stp-dgat");
    c.cfg.user = "off";
    grid.push_back(c);
  }
  {
    Cell c = custom("stp-dgat-embed");
    c.cfg.user = "embed";
    grid.push_back(c);
  }
  {
    Cell c = custom("stp-udgat");
    c.cfg.user = "udgat";
    grid.push_back(c);
  }
  // Individual graphs
  for (const std::string g : {"S", "T", "P", "STP"}) {
    Cell c = custom("graphs-" + g);
    c.cfg.graphs = g;
    grid.push_back(c);
  }
  // Masked self-attention options
  for (const std::string o : {"A", "RW", "A+RW"}) {
    Cell c = custom("options-" + o);
    c.cfg.options = o;
    grid.push_back(c);
  }
  // Explore / exploit in isolation
  {
    Cell c = custom("exploit-only");
    c.cfg.explore = false;
    grid.push_back(c);
  }
  {
    Cell c = custom("explore-only");
    c.cfg.exploit_ = false;
    grid.push_back(c);
  }
  // Scalar vs dimensional attention
  {
    Cell c = custom("attention-scalar");
    c.cfg.attention = "scalar";
    grid.push_back(c);
  }

  for (const Cell& cell : grid) {
    const HyperParams hp = hyper_params(cell.cfg);
    ModelParams params =
        ModelParams::init(a.ds.num_pois(), a.ds.num_users(), hp,
                          splitmix64(cell.cfg.seed ^ kInitSeedSalt));
    Adam adam;
    TrainConfig tc;
    tc.epochs = cell.cfg.epochs;
    tc.lr_initial = cell.cfg.lr_initial;
    tc.lr_after_decay = cell.cfg.lr_after_decay;
    tc.decay_epoch = cell.cfg.decay_epoch;
    tc.rng_seed = splitmix64(cell.cfg.seed ^ kTrainSeedSalt);
    train(a.ds, a.neighborhoods, params, hp, tc, adam);
    const EvalReport report = evaluate(params, hp, a.ds, a.neighborhoods);
    std::ofstream os(dir / (cell.name + ".txt"));
    report.write(os);
    std::cout << cell.name << "\tacc@1 " << report.acc_at.at(1) << "\tmap "
              << report.map_score << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STP-UDGAT next-POI recommendation pipeline"};
  app.require_subcommand(1);

  RunConfig c;
  app.add_option("--workspace", c.workspace, "run directory")->required();
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--variant", c.variant,
                 "pp-dgat-skip | stp-dgat | stp-udgat | custom");
  app.add_option("--dim", c.dim, "embedding and attention width");
  app.add_option("--epochs", c.epochs);
  app.add_option("--tau", c.tau, "new-neighbor budget");
  app.add_option("--mu", c.mu, "walks per vertex");
  app.add_option("--beta", c.beta, "walk length");
  app.add_option("--sigma", c.sigma, "spatial nearest neighbors");
  app.add_option("--dropout", c.dropout);
  app.add_option("--attention", c.attention, "scalar | dimensional");
  app.add_option("--options", c.options, "A | RW | A+RW");
  app.add_option("--graphs", c.graphs, "subset of STP, e.g. S, TP, STP");
  app.add_flag("--explore,!--no-explore", c.explore);
  app.add_flag("--exploit,!--no-exploit", c.exploit_);
  app.add_option("--user", c.user, "off | udgat | embed");
  app.add_flag("--skip", c.skip, "PP residual connection");
  app.add_option("--lr", c.lr_initial);
  app.add_option("--lr-decayed", c.lr_after_decay);
  app.add_option("--decay-epoch", c.decay_epoch);

  auto* pre = app.add_subcommand("preprocess", "parse and filter a raw log");
  pre->add_option("--input", c.input, "raw check-in log")->required();
  pre->add_flag("--cold-start", c.cold_start);
  pre->add_option("--min-users-per-poi", c.min_users_per_poi);
  pre->add_option("--min-visits", c.min_visits);
  pre->add_option("--max-visits", c.max_visits);
  pre->add_option("--fraction", c.train_fraction);

  auto* bg = app.add_subcommand("build-graphs", "build the five graphs");
  bg->add_option("--jaccard", c.jaccard);
  bg->add_flag("--haversine", c.haversine);

  app.add_subcommand("walk", "random walks + exploration neighborhoods");
  app.add_subcommand("train", "train the selected variant");
  auto* ev = app.add_subcommand("evaluate", "score the trained model");
  bool with_baselines = false;
  ev->add_flag("--baselines", with_baselines, "also print TOP and U-TOP");
  app.add_subcommand("ablate", "train/evaluate the ablation grid");
  auto* ea = app.add_subcommand("export-attention",
                                "dump attention coefficients");
  ea->add_option("--samples", c.export_samples);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("preprocess")) cmd_preprocess(c);
    else if (app.got_subcommand("build-graphs")) cmd_build_graphs(c);
    else if (app.got_subcommand("walk")) cmd_walk(c);
    else if (app.got_subcommand("train")) cmd_train(c);
    else if (app.got_subcommand("evaluate")) cmd_evaluate(c, with_baselines);
    else if (app.got_subcommand("ablate")) cmd_ablate(c);
    else if (app.got_subcommand("export-attention")) cmd_export_attention(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
