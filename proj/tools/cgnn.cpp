// cgnn: command-line front end for rewiring, commute-time weights, training,
// evaluation, diagnostics and synthetic data generation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cgnn/analysis.hpp"
#include "cgnn/io.hpp"
#include "cgnn/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cgnn;

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct Common {
  std::string config;
  Overrides overrides;
};

void add_flag(CLI::App* sub, Common& c, const std::string& flag, const std::string& help) {
  const auto key = flag.substr(2);
  sub->add_option_function<std::string>(
      flag, [&c, key](const std::string& v) { c.overrides.emplace_back(key, v); }, help);
}

void add_data_flags(CLI::App* sub, Common& c, bool labels) {
  sub->add_option("--config", c.config, "key = value config file; flags override it");
  add_flag(sub, c, "--graph", "edge list (src<TAB>dst)");
  add_flag(sub, c, "--features", "feature matrix (header 'N d')");
  if (labels) {
    add_flag(sub, c, "--labels", "node labels (node<TAB>label)");
    add_flag(sub, c, "--splits", "node splits (node<TAB>train|val|test)");
  }
  add_flag(sub, c, "--out-dir", "output directory");
}

void add_commute_flags(CLI::App* sub, Common& c) {
  add_flag(sub, c, "--seed", "seed for the randomized SVD and model init");
  add_flag(sub, c, "--rank-q", "truncated SVD rank");
  add_flag(sub, c, "--backend", "dilap | dense_oracle");
  add_flag(sub, c, "--dense-cap", "largest N allowed on dense paths");
  add_flag(sub, c, "--variant", "rewire | ppr | sym");
  add_flag(sub, c, "--ppr-gamma", "teleport-walk continuation probability");
}

void add_train_flags(CLI::App* sub, Common& c) {
  add_flag(sub, c, "--layers", "message-passing layers");
  add_flag(sub, c, "--hidden", "hidden width");
  add_flag(sub, c, "--lr", "learning rate");
  add_flag(sub, c, "--weight-decay", "L2 weight decay");
  add_flag(sub, c, "--epochs", "training epochs");
  add_flag(sub, c, "--activation", "relu | none");
}

RunConfig make_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  for (const auto& [k, v] : c.overrides) cfg.set(k, v);
  return cfg;
}

DiGraph load_graph(const RunConfig& cfg, const Eigen::MatrixXd& x) {
  std::ifstream in(cfg.paths.graph);
  if (!in) throw std::runtime_error("cannot open graph '" + cfg.paths.graph.string() + "'");
  return DiGraph::build(static_cast<std::size_t>(x.rows()), io::read_edges(in, cfg.paths.graph.string()));
}

Eigen::MatrixXd load_features(const RunConfig& cfg) {
  std::ifstream in(cfg.paths.features);
  if (!in) throw std::runtime_error("cannot open features '" + cfg.paths.features.string() + "'");
  return io::read_features(in, cfg.paths.features.string());
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  template <typename F>
  void emit(const std::string& name, F&& writer) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    writer(out);
    files_.emplace_back(name);
  }

  void finish() { write_manifest(dir_, files_); }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void cmd_rewire(const Common& c) {
  const auto cfg = stage("config", [&] { return make_config(c); });
  const auto x = stage("load", [&] { return load_features(cfg); });
  const auto g = stage("load", [&] { return load_graph(cfg, x); });
  const auto r = stage("rewire", [&] {
    return rewire(cfg.variant == Variant::sym ? symmetrized(g) : g, x);
  });
  stage("write", [&] {
    Outputs out(cfg.out_dir);
    out.emit("rewired.tsv", [&](std::ostream& os) { io::write_edges(os, r.rewired.edges()); });
    out.emit("added_edges.tsv", [&](std::ostream& os) { io::write_edges(os, r.added_edges); });
    out.emit("ordering.txt", [&](std::ostream& os) {
      for (auto v : r.ordering) os << v << '\n';
    });
    out.emit("rewire_metrics.txt", [&](std::ostream& os) {
      const auto conn = strongly_connected(r.rewired);
      fmt::print(os, "num_nodes = {}\n", g.num_nodes());
      fmt::print(os, "edges_before = {}\nedges_after = {}\n", g.num_edges(), r.rewired.num_edges());
      if (g.num_edges()) fmt::print(os, "density_delta = {}\n", density_delta(g, r.rewired));
      fmt::print(os, "strongly_connected = {}\n", conn.strongly_connected);
    });
    out.finish();
  });
}

void cmd_commute(const Common& c) {
  const auto cfg = stage("config", [&] { return make_config(c); });
  const auto x = stage("load", [&] { return load_features(cfg); });
  const auto g = stage("load", [&] { return load_graph(cfg, x); });
  const auto prox = compute_proximity(g, x, cfg);
  stage("write", [&] {
    Outputs out(cfg.out_dir);
    out.emit("commute.tsv", [&](std::ostream& os) { io::write_edge_values(os, g, prox.commute, "commute"); });
    out.emit("proximity_weights.tsv", [&](std::ostream& os) { io::write_proximity_weights(os, g, prox.weights); });
    out.emit("provenance.txt", [&](std::ostream& os) { write_provenance(os, cfg); });
    out.finish();
  });
}

void cmd_train(const Common& c) {
  const auto cfg = stage("config", [&] { return make_config(c); });
  const auto s = run_pipeline(cfg);
  fmt::print("test_accuracy = {}\n", s.test_accuracy);
}

void cmd_eval(const Common& c, const std::string& checkpoint, const std::string& weights,
              const std::string& split) {
  const auto cfg = stage("config", [&] { return make_config(c); });
  const auto data = stage("load", [&] { return io::load_dataset(cfg.paths); });
  const auto params = stage("load", [&] {
    std::ifstream in(checkpoint);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + checkpoint + "'");
    return io::read_checkpoint(in, checkpoint);
  });
  ProximityWeights w;
  if (weights.empty()) {
    w = compute_proximity(data.graph, data.features, cfg).weights;
  } else {
    w = stage("load", [&] {
      std::ifstream in(weights);
      if (!in) throw std::runtime_error("cannot open weights '" + weights + "'");
      return io::read_proximity_weights(in, data.graph, weights);
    });
  }
  const auto& nodes = split == "train" ? data.splits.train
                      : split == "val" ? data.splits.val
                                       : data.splits.test;
  const double acc = stage("evaluate", [&] {
    if (nodes.empty()) throw std::runtime_error("split '" + split + "' is empty");
    return evaluate(params, data.graph, data.features, data.labels, nodes, w);
  });
  stage("write", [&] {
    Outputs out(cfg.out_dir);
    out.emit("eval.txt", [&](std::ostream& os) {
      fmt::print(os, "split = {}\nnodes = {}\naccuracy = {}\n", split, nodes.size(), acc);
    });
    out.finish();
  });
  fmt::print("{}_accuracy = {}\n", split, acc);
}

void cmd_diag(const Common& c, const std::string& weights) {
  const auto cfg = stage("config", [&] { return make_config(c); });
  const auto x = stage("load", [&] { return load_features(cfg); });
  const auto g = stage("load", [&] { return load_graph(cfg, x); });
  const auto labels = stage("load", [&] {
    std::ifstream in(cfg.paths.labels);
    if (!in) throw std::runtime_error("cannot open labels '" + cfg.paths.labels.string() + "'");
    return io::read_labels(in, g.num_nodes(), cfg.paths.labels.string());
  });

  DiagnosticsReport report;
  ProximityWeights w;
  if (weights.empty()) {
    const auto prox = compute_proximity(g, x, cfg);
    w = prox.weights;
    if (g.num_edges()) report.density_delta = density_delta(g.num_edges(), prox.walk_graph.num_edges());
    if (g.num_nodes() <= cfg.dense_cap) {
      report.commute_delta = stage("diag", [&] {
        return lscc_commute_delta(g, prox.walk_graph, cfg.dense_cap);
      });
    }
  } else {
    w = stage("load", [&] {
      std::ifstream in(weights);
      if (!in) throw std::runtime_error("cannot open weights '" + weights + "'");
      return io::read_proximity_weights(in, g, weights);
    });
  }
  stage("diag", [&] {
    const auto d = heterophily_distances(label_similarity_matrix(g, labels), g, w);
    report.dist_adjacency = d.dist_adjacency;
    report.dist_proximity = d.dist_proximity;
    report.homophily = g.num_edges() ? homophily_ratio(g, labels) : 0.0;
  });
  stage("write", [&] {
    Outputs out(cfg.out_dir);
    out.emit("diagnostics.txt", [&](std::ostream& os) { write_report(os, report); });
    out.emit("edge_table.tsv", [&](std::ostream& os) { write_edge_table(os, g, labels, w); });
    out.finish();
  });
}

struct SynthArgs {
  std::string kind = "two_block";
  std::size_t n = 200;
  std::uint64_t seed = 0;
  io::SyntheticParams params;
  std::string out_dir = "data";
};

void cmd_synth(const SynthArgs& a) {
  const auto data = stage("synth", [&] {
    return io::generate_synthetic(io::parse_synthetic_kind(a.kind), a.n, a.params, a.seed);
  });
  stage("write", [&] {
    const auto paths = io::save_dataset(data, a.out_dir);
    std::vector<fs::path> files;
    for (const auto* p : {&paths.graph, &paths.features, &paths.labels, &paths.splits}) {
      files.push_back(p->filename());
    }
    write_manifest(a.out_dir, files);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commute-time weighted message passing on directed graphs"};
  app.require_subcommand(1);

  Common rewire_c, commute_c, train_c, eval_c, diag_c;
  auto* rewire_cmd = app.add_subcommand("rewire", "similarity rewiring of a digraph");
  add_data_flags(rewire_cmd, rewire_c, false);
  add_flag(rewire_cmd, rewire_c, "--variant", "rewire | sym");

  auto* commute_cmd = app.add_subcommand("commute", "per-edge commute times and proximity weights");
  add_data_flags(commute_cmd, commute_c, false);
  add_commute_flags(commute_cmd, commute_c);

  auto* train_cmd = app.add_subcommand("train", "run the full pipeline and train a model");
  add_data_flags(train_cmd, train_c, true);
  add_commute_flags(train_cmd, train_c);
  add_train_flags(train_cmd, train_c);

  std::string checkpoint, eval_weights, split = "test";
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_data_flags(eval_cmd, eval_c, true);
  add_commute_flags(eval_cmd, eval_c);
  eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--weights", eval_weights, "proximity_weights.tsv; recomputed if omitted");
  eval_cmd->add_option("--split", split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}));

  std::string diag_weights;
  auto* diag_cmd = app.add_subcommand("diag", "label-similarity and commute diagnostics");
  add_data_flags(diag_cmd, diag_c, true);
  add_commute_flags(diag_cmd, diag_c);
  diag_cmd->add_option("--weights", diag_weights, "proximity_weights.tsv; recomputed if omitted");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a seeded synthetic dataset");
  synth_cmd->add_option("--kind", synth.kind, "directed_cycle | two_block | random_digraph");
  synth_cmd->add_option("--n", synth.n, "number of nodes");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--p-in", synth.params.p_in, "two_block intra-block edge probability");
  synth_cmd->add_option("--p-out", synth.params.p_out, "two_block inter-block edge probability");
  synth_cmd->add_option("--p", synth.params.p, "random_digraph edge probability");
  synth_cmd->add_option("--feature-dim", synth.params.feature_dim, "feature dimension");
  synth_cmd->add_option("--noise", synth.params.noise, "feature noise std-dev");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rewire_cmd->parsed()) cmd_rewire(rewire_c);
    if (commute_cmd->parsed()) cmd_commute(commute_c);
    if (train_cmd->parsed()) cmd_train(train_c);
    if (eval_cmd->parsed()) cmd_eval(eval_c, checkpoint, eval_weights, split);
    if (diag_cmd->parsed()) cmd_diag(diag_c, diag_weights);
    if (synth_cmd->parsed()) cmd_synth(synth);
  } catch (const StageError& e) {
    fmt::print(stderr, "error [{}]: {}\n", e.stage(), e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error [cli]: {}\n", e.what());
    return 1;
  }
  return 0;
}
