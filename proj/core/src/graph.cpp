#include "cgnn/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace cgnn {

namespace {

void build_csr(std::size_t n, std::span<const Edge> edges, bool by_src,
               std::vector<std::size_t>& offsets, std::vector<std::size_t>& ids) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) {
    ++offsets[static_cast<std::size_t>(by_src ? e.src : e.dst) + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  ids.assign(edges.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    auto node = static_cast<std::size_t>(by_src ? edges[k].src : edges[k].dst);
    ids[cursor[node]++] = k;
  }
}

void check_permutation(std::span<const std::size_t> perm, std::size_t n, const char* what) {
  if (perm.size() != n) {
    throw GraphError(std::string(what) + " permutation has wrong length");
  }
  std::vector<char> seen(n, 0);
  for (auto v : perm) {
    if (v >= n || seen[v]) {
      throw GraphError(std::string(what) + " permutation is not a bijection");
    }
    seen[v] = 1;
  }
}

}  // namespace

DiGraph DiGraph::build(std::size_t num_nodes, std::span<const Edge> edges) {
  if (num_nodes == 0) {
    throw GraphError("graph must have at least one node");
  }
  const auto n = static_cast<NodeId>(num_nodes);
  DiGraph g;
  g.num_nodes_ = num_nodes;
  g.self_loop_.assign(num_nodes, 0);
  g.edges_.reserve(edges.size());

  std::set<Edge> seen;
  for (const auto& e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n) {
      throw GraphError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                       ") has a node id outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (!seen.insert(e).second) continue;
    g.edges_.push_back(e);
    if (e.src == e.dst) g.self_loop_[static_cast<std::size_t>(e.src)] = 1;
  }

  build_csr(num_nodes, g.edges_, true, g.out_offsets_, g.out_ids_);
  build_csr(num_nodes, g.edges_, false, g.in_offsets_, g.in_ids_);

  g.sorted_ids_.resize(g.edges_.size());
  std::iota(g.sorted_ids_.begin(), g.sorted_ids_.end(), 0);
  std::sort(g.sorted_ids_.begin(), g.sorted_ids_.end(),
            [&](std::size_t a, std::size_t b) { return g.edges_[a] < g.edges_[b]; });
  return g;
}

std::optional<std::size_t> DiGraph::edge_index(NodeId src, NodeId dst) const {
  const Edge key{src, dst};
  auto it = std::lower_bound(sorted_ids_.begin(), sorted_ids_.end(), key,
                             [&](std::size_t id, const Edge& k) { return edges_[id] < k; });
  if (it != sorted_ids_.end() && edges_[*it] == key) return *it;
  return std::nullopt;
}

bool DiGraph::has_edge(NodeId src, NodeId dst) const { return edge_index(src, dst).has_value(); }

std::size_t DiGraph::out_degree(NodeId node) const {
  auto i = static_cast<std::size_t>(node);
  return out_offsets_[i + 1] - out_offsets_[i];
}

std::size_t DiGraph::in_degree(NodeId node) const {
  auto i = static_cast<std::size_t>(node);
  return in_offsets_[i + 1] - in_offsets_[i];
}

std::span<const std::size_t> DiGraph::out_edges(NodeId node) const {
  auto i = static_cast<std::size_t>(node);
  return {out_ids_.data() + out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]};
}

std::span<const std::size_t> DiGraph::in_edges(NodeId node) const {
  auto i = static_cast<std::size_t>(node);
  return {in_ids_.data() + in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]};
}

StochasticMatrix transition_matrix(const DiGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(g.num_edges());
  for (NodeId i = 0; i < n; ++i) {
    const auto deg = g.out_degree(i);
    if (deg == 0) {
      throw GraphError("node " + std::to_string(i) +
                       " has no out-edges (absorbing); rewire or add self-loops first");
    }
    const double p = 1.0 / static_cast<double>(deg);
    for (auto k : g.out_edges(i)) {
      triplets.emplace_back(i, g.edge(k).dst, p);
    }
  }
  StochasticMatrix out;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

IncidenceMatrix incidence_matrix(const DiGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const auto m = static_cast<Eigen::Index>(g.num_edges());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.num_edges());
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& e = g.edge(static_cast<std::size_t>(k));
    if (e.src == e.dst) continue;  // +1 and -1 cancel in the same row
    triplets.emplace_back(e.src, k, 1.0);
    triplets.emplace_back(e.dst, k, -1.0);
  }
  IncidenceMatrix out;
  out.matrix.resize(n, m);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

std::vector<std::size_t> strong_components(const DiGraph& g) {
  // Iterative Tarjan.
  const std::size_t n = g.num_nodes();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next out-edge position)
  std::size_t counter = 0, components = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos == 0 && index[v] == kUnvisited) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      auto outs = g.out_edges(static_cast<NodeId>(v));
      if (pos < outs.size()) {
        auto w = static_cast<std::size_t>(g.edge(outs[pos]).dst);
        ++pos;
        if (index[w] == kUnvisited) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = components;
        } while (w != v);
        ++components;
      }
      const std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        auto parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return comp;
}

Connectivity strongly_connected(const DiGraph& g) {
  auto comp = strong_components(g);
  std::size_t count = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  return {count == 1, count};
}

DiGraph add_self_loops(const DiGraph& g) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    auto node = static_cast<NodeId>(i);
    if (!g.has_self_loop(node)) edges.push_back({node, node});
  }
  return DiGraph::build(g.num_nodes(), edges);
}

DiGraph symmetrized(const DiGraph& g) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  for (const auto& e : g.edges()) edges.push_back({e.dst, e.src});
  return DiGraph::build(g.num_nodes(), edges);
}

DiGraph induced_subgraph(const DiGraph& g, std::span<const NodeId> nodes) {
  std::vector<NodeId> relabel(g.num_nodes(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    auto v = nodes[k];
    if (v < 0 || static_cast<std::size_t>(v) >= g.num_nodes()) {
      throw GraphError("induced_subgraph: node id out of range");
    }
    relabel[static_cast<std::size_t>(v)] = static_cast<NodeId>(k);
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    auto s = relabel[static_cast<std::size_t>(e.src)];
    auto d = relabel[static_cast<std::size_t>(e.dst)];
    if (s >= 0 && d >= 0) edges.push_back({s, d});
  }
  return DiGraph::build(nodes.size(), edges);
}

DiGraph permute(const DiGraph& g,
                const std::optional<std::vector<NodeId>>& node_perm,
                const std::optional<std::vector<std::size_t>>& edge_perm) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  if (node_perm) {
    std::vector<std::size_t> as_size(node_perm->size());
    for (std::size_t i = 0; i < as_size.size(); ++i) {
      if ((*node_perm)[i] < 0) throw GraphError("node permutation is not a bijection");
      as_size[i] = static_cast<std::size_t>((*node_perm)[i]);
    }
    check_permutation(as_size, g.num_nodes(), "node");
    for (auto& e : edges) {
      e.src = (*node_perm)[static_cast<std::size_t>(e.src)];
      e.dst = (*node_perm)[static_cast<std::size_t>(e.dst)];
    }
  }
  if (edge_perm) {
    check_permutation(*edge_perm, g.num_edges(), "edge");
    std::vector<Edge> reordered(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) reordered[k] = edges[(*edge_perm)[k]];
    edges = std::move(reordered);
  }
  return DiGraph::build(g.num_nodes(), edges);
}

}  // namespace cgnn
