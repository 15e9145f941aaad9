#include "cgnn/rewiring.hpp"

#include <algorithm>
#include <numeric>

namespace cgnn {

Eigen::VectorXd anchor_vector(const FeatureMatrix& x) {
  if (x.rows() == 0) throw GraphError("anchor_vector: empty feature matrix");
  return x.colwise().mean().transpose();
}

std::vector<NodeId> similarity_order(const FeatureMatrix& x, const Eigen::VectorXd& anchor) {
  if (anchor.size() != x.cols()) {
    throw GraphError("similarity_order: anchor has dimension " + std::to_string(anchor.size()) +
                     ", features have " + std::to_string(x.cols()));
  }
  const auto n = static_cast<std::size_t>(x.rows());
  const double anchor_norm = anchor.norm();
  std::vector<double> sim(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double row_norm = x.row(static_cast<Eigen::Index>(i)).norm();
    if (row_norm > 0.0 && anchor_norm > 0.0) {
      sim[i] = x.row(static_cast<Eigen::Index>(i)).dot(anchor) / (row_norm * anchor_norm);
    }
  }
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return sim[static_cast<std::size_t>(a)] > sim[static_cast<std::size_t>(b)];
  });
  return order;
}

RewiringResult rewire(const DiGraph& g, const FeatureMatrix& x) {
  if (static_cast<std::size_t>(x.rows()) != g.num_nodes()) {
    throw GraphError("rewire: feature matrix has " + std::to_string(x.rows()) +
                     " rows for a graph with " + std::to_string(g.num_nodes()) + " nodes");
  }
  RewiringResult out;
  out.anchor = anchor_vector(x);
  out.ordering = similarity_order(x, out.anchor);

  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  auto add = [&](Edge e) {
    if (!g.has_edge(e.src, e.dst)) {
      edges.push_back(e);
      out.added_edges.push_back(e);
    }
  };
  for (std::size_t k = 0; k + 1 < out.ordering.size(); ++k) {
    add({out.ordering[k], out.ordering[k + 1]});
    add({out.ordering[k + 1], out.ordering[k]});
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    add({static_cast<NodeId>(i), static_cast<NodeId>(i)});
  }
  out.rewired = DiGraph::build(g.num_nodes(), edges);
  return out;
}

double density_delta(std::size_t edges_before, std::size_t edges_after) {
  if (edges_before == 0) throw GraphError("density_delta: original graph has no edges");
  return (static_cast<double>(edges_after) - static_cast<double>(edges_before)) /
         static_cast<double>(edges_before);
}

double density_delta(const DiGraph& g, const DiGraph& g_rewired) {
  if (g.num_nodes() != g_rewired.num_nodes()) {
    throw GraphError("density_delta: graphs have different node counts");
  }
  return density_delta(g.num_edges(), g_rewired.num_edges());
}

}  // namespace cgnn
