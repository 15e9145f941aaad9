#include "cgnn/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string_view>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cgnn::io {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

/// Iterates non-empty, comment-stripped lines and splits them on whitespace.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(is_, line_)) {
      ++number_;
      if (auto hash = line_.find('#'); hash != std::string::npos) line_.resize(hash);
      tokens.clear();
      std::string_view rest(line_);
      while (!rest.empty()) {
        const auto start = rest.find_first_not_of(" \t\r");
        if (start == std::string_view::npos) break;
        rest.remove_prefix(start);
        const auto end = rest.find_first_of(" \t\r");
        tokens.push_back(rest.substr(0, end));
        if (end == std::string_view::npos) break;
        rest.remove_prefix(end);
      }
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, number_, what); }

  template <typename T>
  T number(std::string_view token) const {
    T value{};
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail("cannot parse '" + std::string(token) + "'");
    return value;
  }

  std::size_t line_number() const { return number_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& is_;
  std::string source_;
  std::string line_;
  std::size_t number_ = 0;
};

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open '" + p.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  return out;
}

NodeId checked_node(const LineReader& r, std::string_view token, std::size_t num_nodes) {
  const auto v = r.number<NodeId>(token);
  if (v < 0 || static_cast<std::size_t>(v) >= num_nodes) {
    r.fail("node id " + std::to_string(v) + " outside [0, " + std::to_string(num_nodes) + ")");
  }
  return v;
}

void write_row(std::ostream& os, const auto& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) os << ' ';
    fmt::print(os, "{}", row(j));
  }
  os << '\n';
}

}  // namespace

std::vector<Edge> read_edges(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string_view> tok;
  std::vector<Edge> edges;
  while (r.next(tok)) {
    if (tok.size() != 2) r.fail("expected 'src dst'");
    const auto s = r.number<NodeId>(tok[0]);
    const auto d = r.number<NodeId>(tok[1]);
    if (s < 0 || d < 0) r.fail("negative node id");
    edges.push_back({s, d});
  }
  return edges;
}

void write_edges(std::ostream& os, std::span<const Edge> edges) {
  for (const auto& e : edges) fmt::print(os, "{}\t{}\n", e.src, e.dst);
}

Eigen::MatrixXd read_features(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string_view> tok;
  if (!r.next(tok)) r.fail("missing 'N d' header");
  if (tok.size() != 2) r.fail("header must be 'N d'");
  const auto n = r.number<Eigen::Index>(tok[0]);
  const auto d = r.number<Eigen::Index>(tok[1]);
  if (n < 1 || d < 1) r.fail("feature header needs N >= 1 and d >= 1");
  Eigen::MatrixXd x(n, d);
  Eigen::Index row = 0;
  while (r.next(tok)) {
    if (row >= n) r.fail("more than the declared " + std::to_string(n) + " feature rows");
    if (static_cast<Eigen::Index>(tok.size()) != d) {
      r.fail("expected " + std::to_string(d) + " values, found " + std::to_string(tok.size()));
    }
    for (Eigen::Index j = 0; j < d; ++j) x(row, j) = r.number<double>(tok[static_cast<std::size_t>(j)]);
    ++row;
  }
  if (row != n) {
    r.fail("declared " + std::to_string(n) + " feature rows, found " + std::to_string(row));
  }
  return x;
}

void write_features(std::ostream& os, const Eigen::MatrixXd& x) {
  fmt::print(os, "{} {}\n", x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) write_row(os, x.row(i));
}

LabelVector read_labels(std::istream& is, std::size_t num_nodes, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string_view> tok;
  LabelVector labels(num_nodes, -1);
  while (r.next(tok)) {
    if (tok.size() != 2) r.fail("expected 'node label'");
    const auto v = checked_node(r, tok[0], num_nodes);
    const int y = r.number<int>(tok[1]);
    if (y < 0) r.fail("labels must be non-negative");
    auto& slot = labels[static_cast<std::size_t>(v)];
    if (slot != -1) r.fail("node " + std::to_string(v) + " labelled twice");
    slot = y;
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (labels[i] == -1) r.fail("node " + std::to_string(i) + " has no label");
  }
  return labels;
}

void write_labels(std::ostream& os, const LabelVector& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) fmt::print(os, "{}\t{}\n", i, labels[i]);
}

SplitAssignment read_splits(std::istream& is, std::size_t num_nodes, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string_view> tok;
  SplitAssignment s;
  std::vector<char> seen(num_nodes, 0);
  while (r.next(tok)) {
    if (tok.size() != 2) r.fail("expected 'node split'");
    const auto v = checked_node(r, tok[0], num_nodes);
    if (seen[static_cast<std::size_t>(v)]) {
      r.fail("node " + std::to_string(v) + " appears in more than one split (overlap)");
    }
    seen[static_cast<std::size_t>(v)] = 1;
    if (tok[1] == "train") {
      s.train.push_back(v);
    } else if (tok[1] == "val") {
      s.val.push_back(v);
    } else if (tok[1] == "test") {
      s.test.push_back(v);
    } else {
      r.fail("unknown split '" + std::string(tok[1]) + "'");
    }
  }
  return s;
}

void write_splits(std::ostream& os, const SplitAssignment& s) {
  for (auto v : s.train) fmt::print(os, "{}\ttrain\n", v);
  for (auto v : s.val) fmt::print(os, "{}\tval\n", v);
  for (auto v : s.test) fmt::print(os, "{}\ttest\n", v);
}

void Dataset::validate() const {
  const auto n = graph.num_nodes();
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw std::runtime_error("dataset: " + std::to_string(features.rows()) +
                             " feature rows for " + std::to_string(n) + " nodes");
  }
  if (labels.size() != n) throw std::runtime_error("dataset: label count does not match N");
  std::vector<char> seen(n, 0);
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    for (auto v : *part) {
      if (v < 0 || static_cast<std::size_t>(v) >= n) {
        throw std::runtime_error("dataset: split node " + std::to_string(v) + " out of range");
      }
      if (seen[static_cast<std::size_t>(v)]) {
        throw std::runtime_error("dataset: node " + std::to_string(v) + " is in overlapping splits");
      }
      seen[static_cast<std::size_t>(v)] = 1;
    }
  }
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset d;
  {
    auto in = open_input(paths.features);
    d.features = read_features(in, paths.features.string());
  }
  const auto n = static_cast<std::size_t>(d.features.rows());
  {
    auto in = open_input(paths.graph);
    const auto edges = read_edges(in, paths.graph.string());
    for (const auto& e : edges) {
      if (static_cast<std::size_t>(std::max(e.src, e.dst)) >= n) {
        throw std::runtime_error(paths.graph.string() + ": node id " +
                                 std::to_string(std::max(e.src, e.dst)) +
                                 " inconsistent with N = " + std::to_string(n) +
                                 " from the feature file");
      }
    }
    d.graph = DiGraph::build(n, edges);
  }
  {
    auto in = open_input(paths.labels);
    d.labels = read_labels(in, n, paths.labels.string());
  }
  {
    auto in = open_input(paths.splits);
    d.splits = read_splits(in, n, paths.splits.string());
  }
  d.validate();
  return d;
}

DatasetPaths save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetPaths p{dir / "graph.tsv", dir / "features.txt", dir / "labels.tsv", dir / "splits.tsv"};
  {
    auto out = open_output(p.graph);
    write_edges(out, data.graph.edges());
  }
  {
    auto out = open_output(p.features);
    write_features(out, data.features);
  }
  {
    auto out = open_output(p.labels);
    write_labels(out, data.labels);
  }
  {
    auto out = open_output(p.splits);
    write_splits(out, data.splits);
  }
  return p;
}

namespace {
constexpr std::string_view kCheckpointMagic = "cgnn-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

void write_checkpoint(std::ostream& os, const ModelParams& params) {
  params.validate();
  fmt::print(os, "{} {}\n", kCheckpointMagic, kCheckpointVersion);
  fmt::print(os, "layers {} classes {} activation {} seed {}\n", params.layers.size(),
             params.num_classes(), to_string(params.activation), params.seed);
  os << "dims " << params.input_dim();
  for (const auto& l : params.layers) os << ' ' << l.out_dim();
  os << ' ' << params.num_classes() << '\n';
  params.for_each_block([&](const std::string& name, const auto& block) {
    fmt::print(os, "param {} {} {}\n", name, block.rows(), block.cols());
    for (Eigen::Index i = 0; i < block.rows(); ++i) write_row(os, block.row(i));
  });
}

ModelParams read_checkpoint(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string_view> tok;
  if (!r.next(tok) || tok.size() != 2 || tok[0] != kCheckpointMagic) r.fail("not a cgnn checkpoint");
  if (r.number<int>(tok[1]) != kCheckpointVersion) r.fail("unsupported checkpoint version");

  if (!r.next(tok) || tok.size() != 8 || tok[0] != "layers" || tok[2] != "classes" ||
      tok[4] != "activation" || tok[6] != "seed") {
    r.fail("malformed checkpoint header");
  }
  const auto num_layers = r.number<std::size_t>(tok[1]);
  const auto classes = r.number<Eigen::Index>(tok[3]);
  ModelParams p;
  try {
    p.activation = parse_activation(tok[5]);
  } catch (const ModelError& e) {
    r.fail(e.what());
  }
  p.seed = r.number<std::uint64_t>(tok[7]);

  if (!r.next(tok) || tok.empty() || tok[0] != "dims" || tok.size() != num_layers + 3) {
    r.fail("malformed dims line");
  }
  std::vector<Eigen::Index> dims;
  for (std::size_t k = 1; k < tok.size(); ++k) dims.push_back(r.number<Eigen::Index>(tok[k]));
  if (dims.back() != classes) r.fail("dims line disagrees with class count");
  p.layers.resize(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) {
    p.layers[l].w_self.resize(dims[l], dims[l + 1]);
    p.layers[l].w_in.resize(dims[l], dims[l + 1]);
    p.layers[l].w_out.resize(dims[l], dims[l + 1]);
    p.layers[l].bias.resize(dims[l + 1]);
  }
  p.head_w.resize(dims[num_layers], classes);
  p.head_b.resize(classes);

  p.for_each_block([&](const std::string& name, auto& block) {
    if (!r.next(tok) || tok.size() != 4 || tok[0] != "param" || tok[1] != name) {
      r.fail("expected 'param " + name + " <rows> <cols>'");
    }
    if (r.number<Eigen::Index>(tok[2]) != block.rows() ||
        r.number<Eigen::Index>(tok[3]) != block.cols()) {
      r.fail("block " + name + " has unexpected shape");
    }
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      if (!r.next(tok) || static_cast<Eigen::Index>(tok.size()) != block.cols()) {
        r.fail("block " + name + " row " + std::to_string(i) + " has wrong width");
      }
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        block(i, j) = r.number<double>(tok[static_cast<std::size_t>(j)]);
      }
    }
  });
  if (r.next(tok)) r.fail("trailing content after last parameter block");
  p.validate();
  return p;
}

void write_proximity_weights(std::ostream& os, const DiGraph& g, const ProximityWeights& w) {
  os << "src\tdst\tout_weight\tin_weight\n";
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edge(k);
    fmt::print(os, "{}\t{}\t{}\t{}\n", e.src, e.dst, w.out_weight[k], w.in_weight[k]);
  }
}

ProximityWeights read_proximity_weights(std::istream& is, const DiGraph& g,
                                        const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string_view> tok;
  if (!r.next(tok) || tok.size() != 4 || tok[0] != "src") r.fail("missing weights header");
  ProximityWeights w{std::vector<double>(g.num_edges(), -1.0),
                     std::vector<double>(g.num_edges(), -1.0)};
  while (r.next(tok)) {
    if (tok.size() != 4) r.fail("expected 'src dst out_weight in_weight'");
    const auto s = checked_node(r, tok[0], g.num_nodes());
    const auto d = checked_node(r, tok[1], g.num_nodes());
    const auto k = g.edge_index(s, d);
    if (!k) r.fail("edge (" + std::to_string(s) + ", " + std::to_string(d) + ") not in graph");
    w.out_weight[*k] = r.number<double>(tok[2]);
    w.in_weight[*k] = r.number<double>(tok[3]);
  }
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    if (w.out_weight[k] < 0.0) r.fail("no weight for edge " + std::to_string(k));
  }
  return w;
}

void write_edge_values(std::ostream& os, const DiGraph& g, std::span<const double> values,
                       const std::string& column) {
  os << "src\tdst\t" << column << '\n';
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    fmt::print(os, "{}\t{}\t{}\n", g.edge(k).src, g.edge(k).dst, values[k]);
  }
}

void write_history(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch\ttrain_loss\ttrain_accuracy\tval_accuracy\n";
  for (const auto& h : history) {
    fmt::print(os, "{}\t{}\t{}\t{}\n", h.epoch, h.train_loss, h.train_accuracy, h.val_accuracy);
  }
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "directed_cycle") return SyntheticKind::directed_cycle;
  if (name == "two_block") return SyntheticKind::two_block;
  if (name == "random_digraph") return SyntheticKind::random_digraph;
  throw std::invalid_argument("unknown synthetic kind '" + std::string(name) + "'");
}

const char* to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::directed_cycle: return "directed_cycle";
    case SyntheticKind::two_block: return "two_block";
    case SyntheticKind::random_digraph: return "random_digraph";
  }
  return "unknown";
}

Dataset generate_synthetic(SyntheticKind kind, std::size_t n, const SyntheticParams& params,
                           std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_synthetic: n must be >= 2");
  auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!probability(params.p_in) || !probability(params.p_out) || !probability(params.p)) {
    throw std::invalid_argument("generate_synthetic: edge probabilities must lie in [0, 1]");
  }
  if (params.feature_dim < 2 || params.noise < 0.0 || params.train_fraction <= 0.0 ||
      params.val_fraction < 0.0 || params.train_fraction + params.val_fraction >= 1.0) {
    throw std::invalid_argument("generate_synthetic: invalid feature or split parameters");
  }

  // Separate streams so the graph does not shift when feature settings change.
  std::mt19937_64 graph_rng(seed);
  std::mt19937_64 feature_rng(seed ^ 0x5bd1e995ULL);
  std::mt19937_64 split_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset d;
  std::vector<Edge> edges;
  d.labels.assign(n, 0);
  d.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), params.feature_dim);
  const auto nn = static_cast<NodeId>(n);

  switch (kind) {
    case SyntheticKind::directed_cycle:
      for (NodeId i = 0; i < nn; ++i) {
        edges.push_back({i, (i + 1) % nn});
        d.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
        d.features(i, i % 2) = 1.0;
      }
      break;
    case SyntheticKind::two_block: {
      const NodeId half = nn / 2;
      for (NodeId i = 0; i < nn; ++i) {
        for (NodeId j = 0; j < nn; ++j) {
          if (i == j) continue;
          const bool same = (i < half) == (j < half);
          if (unit(graph_rng) < (same ? params.p_in : params.p_out)) edges.push_back({i, j});
        }
        const int block = i < half ? 0 : 1;
        d.labels[static_cast<std::size_t>(i)] = block;
        d.features(i, block) = 1.0;
      }
      break;
    }
    case SyntheticKind::random_digraph:
      for (NodeId i = 0; i < nn; ++i) {
        for (NodeId j = 0; j < nn; ++j) {
          if (i != j && unit(graph_rng) < params.p) edges.push_back({i, j});
        }
        d.labels[static_cast<std::size_t>(i)] = coin(graph_rng) ? 1 : 0;
      }
      break;
  }
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) {
      d.features(i, j) += params.noise * normal(feature_rng);
    }
  }
  d.graph = DiGraph::build(n, edges);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(params.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(params.val_fraction * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    auto& part = k < n_train ? d.splits.train : (k < n_train + n_val ? d.splits.val : d.splits.test);
    part.push_back(order[k]);
  }
  for (auto* part : {&d.splits.train, &d.splits.val, &d.splits.test}) std::sort(part->begin(), part->end());
  d.validate();
  return d;
}

}  // namespace cgnn::io
