#pragma once

// Label-similarity and homophily diagnostics for comparing plain adjacency
// with commute-time proximity weights.

#include <iosfwd>
#include <optional>

#include <Eigen/SparseCore>

#include "cgnn/commute.hpp"
#include "cgnn/graph.hpp"
#include "cgnn/model.hpp"

namespace cgnn {

struct DiagnosticsReport {
  double dist_adjacency = 0.0;  // || M - (A + A^T) ||_F^2
  double dist_proximity = 0.0;  // || M - (C_in + C_out) ||_F^2
  double homophily = 0.0;
  std::optional<double> density_delta;
  std::optional<double> commute_delta;
};

/// M_ij = 1 when j is an in- or out-neighbor of i and both carry the same label.
Eigen::SparseMatrix<double> label_similarity_matrix(const DiGraph& g, const LabelVector& labels);

struct HeterophilyDistances {
  double dist_adjacency = 0.0;
  double dist_proximity = 0.0;
};

HeterophilyDistances heterophily_distances(const Eigen::SparseMatrix<double>& m, const DiGraph& g,
                                           const ProximityWeights& w);

/// Fraction of edges joining same-label endpoints.
double homophily_ratio(const DiGraph& g, const LabelVector& labels);

/// key = value lines.
void write_report(std::ostream& os, const DiagnosticsReport& report);

/// Tab-separated per-edge table: src dst same_label out_weight in_weight.
void write_edge_table(std::ostream& os, const DiGraph& g, const LabelVector& labels,
                      const ProximityWeights& w);

}  // namespace cgnn
