#include "cgnn/analysis.hpp"

#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cgnn {

namespace {

void check_labels(const DiGraph& g, const LabelVector& labels) {
  if (labels.size() != g.num_nodes()) {
    throw GraphError("labels cover " + std::to_string(labels.size()) + " of " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
}

using Sparse = Eigen::SparseMatrix<double>;

Sparse from_triplets(std::size_t n, const std::vector<Eigen::Triplet<double>>& t) {
  Sparse out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double squared_frobenius(const Sparse& m) { return m.squaredNorm(); }

}  // namespace

Eigen::SparseMatrix<double> label_similarity_matrix(const DiGraph& g, const LabelVector& labels) {
  check_labels(g, labels);
  std::vector<Eigen::Triplet<double>> t;
  for (const auto& e : g.edges()) {
    if (labels[static_cast<std::size_t>(e.src)] != labels[static_cast<std::size_t>(e.dst)]) continue;
    t.emplace_back(e.src, e.dst, 1.0);
    if (e.src != e.dst) t.emplace_back(e.dst, e.src, 1.0);
  }
  Sparse m = from_triplets(g.num_nodes(), t);
  // Mutual edges produce duplicate entries; M is binary.
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (Sparse::InnerIterator it(m, k); it; ++it) it.valueRef() = 1.0;
  }
  return m;
}

HeterophilyDistances heterophily_distances(const Eigen::SparseMatrix<double>& m, const DiGraph& g,
                                           const ProximityWeights& w) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (m.rows() != n || m.cols() != n) throw GraphError("heterophily_distances: shape mismatch");
  if (w.out_weight.size() != g.num_edges() || w.in_weight.size() != g.num_edges()) {
    throw GraphError("heterophily_distances: weights do not match graph edges");
  }
  std::vector<Eigen::Triplet<double>> adj, prox;
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edge(k);
    adj.emplace_back(e.src, e.dst, 1.0);
    adj.emplace_back(e.dst, e.src, 1.0);
    prox.emplace_back(e.src, e.dst, w.out_weight[k]);  // C_out(s, d)
    prox.emplace_back(e.dst, e.src, w.in_weight[k]);   // C_in(d, s)
  }
  const Sparse a = from_triplets(g.num_nodes(), adj);
  const Sparse c = from_triplets(g.num_nodes(), prox);
  return {squared_frobenius(m - a), squared_frobenius(m - c)};
}

double homophily_ratio(const DiGraph& g, const LabelVector& labels) {
  check_labels(g, labels);
  if (g.num_edges() == 0) throw GraphError("homophily_ratio: graph has no edges");
  std::size_t same = 0;
  for (const auto& e : g.edges()) {
    same += labels[static_cast<std::size_t>(e.src)] == labels[static_cast<std::size_t>(e.dst)];
  }
  return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

void write_report(std::ostream& os, const DiagnosticsReport& r) {
  fmt::print(os, "dist_adjacency = {}\n", r.dist_adjacency);
  fmt::print(os, "dist_proximity = {}\n", r.dist_proximity);
  fmt::print(os, "homophily = {}\n", r.homophily);
  if (r.density_delta) fmt::print(os, "density_delta = {}\n", *r.density_delta);
  if (r.commute_delta) fmt::print(os, "commute_delta = {}\n", *r.commute_delta);
}

void write_edge_table(std::ostream& os, const DiGraph& g, const LabelVector& labels,
                      const ProximityWeights& w) {
  check_labels(g, labels);
  os << "src\tdst\tsame_label\tout_weight\tin_weight\n";
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edge(k);
    const bool same = labels[static_cast<std::size_t>(e.src)] == labels[static_cast<std::size_t>(e.dst)];
    fmt::print(os, "{}\t{}\t{}\t{}\t{}\n", e.src, e.dst, same ? 1 : 0, w.out_weight[k], w.in_weight[k]);
  }
}

}  // namespace cgnn
