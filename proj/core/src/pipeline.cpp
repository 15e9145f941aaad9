#include "cgnn/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cgnn/oracle.hpp"

namespace cgnn {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::rewire: return "rewire";
    case Variant::ppr: return "ppr";
    case Variant::sym: return "sym";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "rewire") return Variant::rewire;
  if (name == "ppr") return Variant::ppr;
  if (name == "sym") return Variant::sym;
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected rewire, ppr or sym)");
}

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key '" + std::string(key) + "': cannot parse '" +
                                std::string(value) + "'");
  }
  return out;
}

std::string normalize_key(std::string_view key) {
  std::string k(key);
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  return out;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (dense_cap < 1) throw std::invalid_argument("dense_cap must be >= 1");
  if (!(ppr_gamma > 0.0 && ppr_gamma < 1.0)) {
    throw std::invalid_argument("ppr_gamma must lie in (0, 1)");
  }
}

void RunConfig::set(std::string_view raw_key, std::string_view value) {
  const auto key = normalize_key(raw_key);
  if (key == "graph") {
    paths.graph = std::string(value);
  } else if (key == "features") {
    paths.features = std::string(value);
  } else if (key == "labels") {
    paths.labels = std::string(value);
  } else if (key == "splits") {
    paths.splits = std::string(value);
  } else if (key == "out_dir") {
    out_dir = std::string(value);
  } else if (key == "layers") {
    train.layers = parse_number<std::size_t>(key, value);
  } else if (key == "hidden") {
    train.hidden = parse_number<Eigen::Index>(key, value);
  } else if (key == "lr") {
    train.learning_rate = parse_number<double>(key, value);
  } else if (key == "weight_decay") {
    train.weight_decay = parse_number<double>(key, value);
  } else if (key == "epochs") {
    train.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    train.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "rank_q") {
    train.rank_q = parse_number<std::size_t>(key, value);
  } else if (key == "backend") {
    train.backend = parse_backend(value);
  } else if (key == "activation") {
    train.activation = parse_activation(value);
  } else if (key == "dense_cap") {
    dense_cap = parse_number<std::size_t>(key, value);
  } else if (key == "variant") {
    variant = parse_variant(value);
  } else if (key == "ppr_gamma") {
    ppr_gamma = parse_number<double>(key, value);
  } else if (key == "oversample") {
    svd.oversample = parse_number<std::size_t>(key, value);
  } else if (key == "power_iterations") {
    svd.power_iterations = parse_number<std::size_t>(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + std::string(raw_key) + "'");
  }
}

std::string RunConfig::canonical() const {
  std::string s;
  auto line = [&](std::string_view k, const auto& v) { s += fmt::format("{} = {}\n", k, v); };
  line("graph", paths.graph.string());
  line("features", paths.features.string());
  line("labels", paths.labels.string());
  line("splits", paths.splits.string());
  line("layers", train.layers);
  line("hidden", train.hidden);
  line("lr", train.learning_rate);
  line("weight_decay", train.weight_decay);
  line("epochs", train.epochs);
  line("seed", train.seed);
  line("rank_q", train.rank_q);
  line("backend", to_string(train.backend));
  line("activation", to_string(train.activation));
  line("dense_cap", dense_cap);
  line("variant", to_string(variant));
  line("ppr_gamma", ppr_gamma);
  line("oversample", svd.oversample);
  line("power_iterations", svd.power_iterations);
  return s;
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig read_run_config(std::istream& is, const std::filesystem::path& base_dir,
                          const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw io::ParseError(source, number, "expected 'key = value'");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key.empty()) throw io::ParseError(source, number, "empty key");
    try {
      cfg.set(key, value);
    } catch (const std::exception& e) {
      throw io::ParseError(source, number, e.what());
    }
  }
  if (!base_dir.empty()) {
    for (auto* p : {&cfg.paths.graph, &cfg.paths.features, &cfg.paths.labels, &cfg.paths.splits,
                    &cfg.out_dir}) {
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config '" + file.string() + "'");
  return read_run_config(in, file.parent_path(), file.string());
}

ProximityResult compute_proximity(const DiGraph& g, const FeatureMatrix& x, const RunConfig& cfg) {
  run_stage("config", [&] { cfg.validate(); });
  ProximityResult out;
  const auto n = g.num_nodes();
  const bool dense_walk = cfg.variant == Variant::ppr;

  StochasticMatrix p;
  if (dense_walk) {
    run_stage("rewire", [&] {
      if (n > cfg.dense_cap) {
        throw std::runtime_error("teleporting walk is dense; N = " + std::to_string(n) +
                                 " exceeds dense_cap " + std::to_string(cfg.dense_cap));
      }
      const Eigen::MatrixXd dense =
          oracle::ppr_transition(transition_matrix(add_self_loops(g)), cfg.ppr_gamma);
      const auto nn = static_cast<NodeId>(n);
      std::vector<Edge> all;
      all.reserve(n * n);
      for (NodeId i = 0; i < nn; ++i) {
        for (NodeId j = 0; j < nn; ++j) all.push_back({i, j});
      }
      out.walk_graph = DiGraph::build(n, all);
      for (const auto& e : all) {
        if (!g.has_edge(e.src, e.dst)) out.added_edges.push_back(e);
      }
      p.matrix = dense.sparseView(0.0, 0.0);
      p.matrix.makeCompressed();
    });
  } else {
    run_stage("rewire", [&] {
      const auto base = cfg.variant == Variant::sym ? symmetrized(g) : g;
      auto r = rewire(base, x);
      out.walk_graph = std::move(r.rewired);
      for (const auto& e : out.walk_graph.edges()) {
        if (!g.has_edge(e.src, e.dst)) out.added_edges.push_back(e);
      }
      p = transition_matrix(out.walk_graph);
    });
  }

  out.pi = run_stage("perron", [&] { return perron_vector(p); });

  const auto& backend = cfg.train.backend;
  if (backend == CommuteBackend::dilap) {
    const auto t = run_stage("dilap", [&] {
      auto t = dilap(out.walk_graph, p);
      out.weighted_dilap_trace = weighted_dilap(t, out.pi).matrix.diagonal().sum();
      return t;
    });
    out.factors = run_stage("pseudoinverse", [&] {
      const auto q = std::min(cfg.train.rank_q, n);
      return pseudoinverse_factors(t, q, cfg.train.seed, cfg.svd);
    });
    out.commute = run_stage("commute", [&] {
      return edge_commute_times(*out.factors, out.pi, g.edges());
    });
  } else {
    out.commute = run_stage("commute", [&] {
      if (n > cfg.dense_cap || n > oracle::kOracleCap) {
        throw CommuteError("dense_oracle backend needs N <= " +
                           std::to_string(std::min(cfg.dense_cap, oracle::kOracleCap)) +
                           ", got N = " + std::to_string(n));
      }
      return oracle::pair_commute_times(p, g.edges(), cfg.dense_cap);
    });
  }
  out.weights = run_stage("weights", [&] { return proximity_weights(out.commute, g); });
  return out;
}

std::optional<double> lscc_commute_delta(const DiGraph& g, const DiGraph& walk_graph,
                                         std::size_t dense_cap) {
  const auto comp = strong_components(g);
  std::vector<std::size_t> sizes(g.num_nodes(), 0);
  for (auto c : comp) ++sizes[c];
  const auto largest = static_cast<std::size_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (comp[i] == largest) nodes.push_back(static_cast<NodeId>(i));
  }
  if (nodes.size() < 2) return std::nullopt;

  std::vector<Edge> sub_pairs, walk_pairs;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      sub_pairs.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
      walk_pairs.push_back({nodes[a], nodes[b]});
    }
  }
  const auto sub = induced_subgraph(g, nodes);
  const auto c_orig = oracle::pair_commute_times(transition_matrix(sub), sub_pairs, dense_cap);
  const auto c_rew =
      oracle::pair_commute_times(transition_matrix(walk_graph), walk_pairs, dense_cap);
  return commute_change_delta(c_orig, c_rew, DeltaNormalization::mean);
}

void write_provenance(std::ostream& os, const RunConfig& cfg) {
  fmt::print(os, "seed = {}\n", cfg.train.seed);
  fmt::print(os, "config_hash = {:016x}\n", cfg.hash());
  fmt::print(os, "backend = {}\n", to_string(cfg.train.backend));
  fmt::print(os, "variant = {}\n", to_string(cfg.variant));
  os << "[config]\n" << cfg.canonical();
}

std::filesystem::path write_manifest(const std::filesystem::path& out_dir,
                                     const std::vector<std::filesystem::path>& files) {
  const std::filesystem::path name = "manifest.txt";
  auto out = open_output(out_dir / name);
  for (const auto& f : files) out << f.generic_string() << '\n';
  out << name.generic_string() << '\n';
  return name;
}

RunSummary run_pipeline(const RunConfig& cfg) {
  const auto data = run_stage("load", [&] {
    for (const auto* p : {&cfg.paths.graph, &cfg.paths.features, &cfg.paths.labels,
                          &cfg.paths.splits}) {
      if (p->empty()) throw std::runtime_error("missing input path in config");
      if (!std::filesystem::exists(*p)) {
        throw std::runtime_error("input file '" + p->string() + "' does not exist");
      }
    }
    return io::load_dataset(cfg.paths);
  });
  return run_pipeline(data, cfg);
}

RunSummary run_pipeline(const io::Dataset& data, const RunConfig& cfg) {
  run_stage("load", [&] { data.validate(); });
  RunSummary s;
  s.proximity = compute_proximity(data.graph, data.features, cfg);
  const auto& g = data.graph;
  const auto& w = s.proximity.weights;

  s.training = run_stage("train", [&] {
    return train(g, data.features, data.labels, data.splits, w, cfg.train);
  });
  run_stage("evaluate", [&] {
    const Eigen::MatrixXd logits = forward(s.training.params, g, data.features, w);
    auto acc = [&](const std::vector<NodeId>& nodes) {
      return nodes.empty() ? 0.0 : accuracy(logits, data.labels, nodes);
    };
    s.train_accuracy = acc(data.splits.train);
    s.val_accuracy = acc(data.splits.val);
    s.test_accuracy = acc(data.splits.test);
  });

  run_stage("write", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    auto emit = [&](const char* name, auto&& writer) {
      auto out = open_output(cfg.out_dir / name);
      writer(out);
      if (!out) throw std::runtime_error(std::string("failed writing ") + name);
      s.files.emplace_back(name);
    };
    emit("walk_graph.tsv", [&](std::ostream& os) { io::write_edges(os, s.proximity.walk_graph.edges()); });
    emit("commute.tsv", [&](std::ostream& os) { io::write_edge_values(os, g, s.proximity.commute, "commute"); });
    emit("proximity_weights.tsv", [&](std::ostream& os) { io::write_proximity_weights(os, g, w); });
    emit("checkpoint.txt", [&](std::ostream& os) { io::write_checkpoint(os, s.training.params); });
    emit("history.tsv", [&](std::ostream& os) { io::write_history(os, s.training.history); });
    emit("metrics.txt", [&](std::ostream& os) {
      const auto& last = s.training.history.back();
      fmt::print(os, "num_nodes = {}\n", g.num_nodes());
      fmt::print(os, "num_edges = {}\n", g.num_edges());
      fmt::print(os, "walk_graph_edges = {}\n", s.proximity.walk_graph.num_edges());
      fmt::print(os, "density_delta = {}\n",
                 g.num_edges() ? density_delta(g.num_edges(), s.proximity.walk_graph.num_edges()) : 0.0);
      fmt::print(os, "perron_iterations = {}\n", s.proximity.pi.iterations_used);
      fmt::print(os, "perron_residual = {}\n", s.proximity.pi.residual);
      if (s.proximity.factors) {
        fmt::print(os, "rank_q_used = {}\n", s.proximity.factors->rank_q());
        fmt::print(os, "weighted_dilap_trace = {}\n", s.proximity.weighted_dilap_trace);
      }
      fmt::print(os, "epochs = {}\n", s.training.history.size());
      fmt::print(os, "final_train_loss = {}\n", last.train_loss);
      fmt::print(os, "train_accuracy = {}\n", s.train_accuracy);
      fmt::print(os, "val_accuracy = {}\n", s.val_accuracy);
      fmt::print(os, "test_accuracy = {}\n", s.test_accuracy);
    });
    emit("provenance.txt", [&](std::ostream& os) { write_provenance(os, cfg); });
    s.files.push_back(write_manifest(cfg.out_dir, s.files));
  });
  return s;
}

}  // namespace cgnn
