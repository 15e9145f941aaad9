#pragma once

// Directed-graph data model: an immutable simple digraph with stable edge
// indices, plus the sparse matrix views used by the spectral code
// (transition matrix P, incidence matrix B) and a few structural utilities.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCore>

namespace cgnn {

using NodeId = std::int64_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simple unweighted digraph. Node ids are dense in [0, N); edges keep the
/// order in which they were first supplied and are never duplicated.
class DiGraph {
 public:
  DiGraph() = default;

  /// Validates ids and drops repeated (src, dst) pairs, keeping the first.
  static DiGraph build(std::size_t num_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t k) const { return edges_[k]; }

  bool has_self_loop(NodeId node) const { return self_loop_[static_cast<std::size_t>(node)] != 0; }
  bool has_edge(NodeId src, NodeId dst) const;
  std::optional<std::size_t> edge_index(NodeId src, NodeId dst) const;

  std::size_t out_degree(NodeId node) const;
  std::size_t in_degree(NodeId node) const;

  // Edge ids leaving / entering a node, in ascending edge-index order.
  std::span<const std::size_t> out_edges(NodeId node) const;
  std::span<const std::size_t> in_edges(NodeId node) const;

  friend bool operator==(const DiGraph& a, const DiGraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<char> self_loop_;
  std::vector<std::size_t> out_offsets_, out_ids_;
  std::vector<std::size_t> in_offsets_, in_ids_;
  // (src, dst) sorted index for lookups.
  std::vector<std::size_t> sorted_ids_;
};

/// Row-stochastic transition matrix with the out-edge pattern of its graph.
struct StochasticMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  double operator()(NodeId i, NodeId j) const { return matrix.coeff(i, j); }
};

/// N x M signed incidence matrix; column k belongs to edge k.
struct IncidenceMatrix {
  Eigen::SparseMatrix<double> matrix;
};

struct Connectivity {
  bool strongly_connected = false;
  std::size_t component_count = 0;
};

StochasticMatrix transition_matrix(const DiGraph& g);

IncidenceMatrix incidence_matrix(const DiGraph& g);

Connectivity strongly_connected(const DiGraph& g);

/// Strongly connected component label per node (labels are 0..count-1).
std::vector<std::size_t> strong_components(const DiGraph& g);

DiGraph add_self_loops(const DiGraph& g);

/// Union of g and its reversed edges (original edges first).
DiGraph symmetrized(const DiGraph& g);

/// Subgraph induced by `nodes`; node k of the result is nodes[k].
DiGraph induced_subgraph(const DiGraph& g, std::span<const NodeId> nodes);

/// Relabels and/or reorders a graph.
/// node_perm[i] is the new id of old node i. edge_perm[k] is the old index
/// of the edge placed at position k (applied after relabeling).
DiGraph permute(const DiGraph& g,
                const std::optional<std::vector<NodeId>>& node_perm,
                const std::optional<std::vector<std::size_t>>& edge_perm);

}  // namespace cgnn
