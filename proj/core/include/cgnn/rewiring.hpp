#pragma once

// Similarity-chain rewiring: nodes are ordered by cosine similarity to the
// mean feature vector and consecutive nodes are joined in both directions,
// then every node gets a self-loop. The result is strongly connected and
// aperiodic, so its random walk has a unique stationary distribution.

#include <vector>

#include <Eigen/Dense>

#include "cgnn/graph.hpp"

namespace cgnn {

using FeatureMatrix = Eigen::MatrixXd;

struct RewiringResult {
  DiGraph rewired;
  std::vector<Edge> added_edges;  // edges of `rewired` absent from the input
  Eigen::VectorXd anchor;
  std::vector<NodeId> ordering;
};

Eigen::VectorXd anchor_vector(const FeatureMatrix& x);

/// Node ids by descending cosine similarity to `anchor`; ties go to the lower
/// id. Rows with zero norm (or a zero anchor) get similarity 0.
std::vector<NodeId> similarity_order(const FeatureMatrix& x, const Eigen::VectorXd& anchor);

RewiringResult rewire(const DiGraph& g, const FeatureMatrix& x);

/// Relative change in edge count, (M_rewired - M) / M.
double density_delta(std::size_t edges_before, std::size_t edges_after);
double density_delta(const DiGraph& g, const DiGraph& g_rewired);

}  // namespace cgnn
