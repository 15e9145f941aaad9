#pragma once

// Hitting and commute times from the pseudoinverse of the digraph Laplacian,
// per-edge commute queries on low-rank factors, commute-time proximity
// weights for message passing, and the commute-change diagnostic.

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cgnn/graph.hpp"
#include "cgnn/spectral.hpp"

namespace cgnn {

class CommuteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommuteMatrices {
  Eigen::MatrixXd hitting;  // H(i, j): expected steps from i to first reach j
  Eigen::MatrixXd commute;  // C = H + H^T
};

/// Per-edge aggregation weights keyed by the edge index of the original graph.
/// For edge k = (s, d): out_weight[k] is entry (s, d) of the out-proximity
/// matrix and in_weight[k] is entry (d, s) of the in-proximity matrix.
struct ProximityWeights {
  std::vector<double> out_weight;
  std::vector<double> in_weight;

  static ProximityWeights uniform(std::size_t num_edges) {
    return {std::vector<double>(num_edges, 1.0), std::vector<double>(num_edges, 1.0)};
  }
};

enum class CommuteBackend { dilap, dense_oracle };

const char* to_string(CommuteBackend backend);
CommuteBackend parse_backend(std::string_view name);

inline constexpr std::size_t kDefaultDenseCap = 2000;

/// Dense T^+ (guarded by `dense_cap`).
Eigen::MatrixXd fundamental_matrix_from_dilap(const DiLapMatrix& t,
                                              std::size_t dense_cap = kDefaultDenseCap);

/// H_ij = Tp_jj / pi_j - Tp_ij / sqrt(pi_i pi_j), C = H + H^T.
CommuteMatrices hitting_commute_closed_form(const Eigen::MatrixXd& t_pinv, const PerronVector& pi);
CommuteMatrices hitting_commute_closed_form(const LowRankFactors& factors, const PerronVector& pi,
                                            std::size_t dense_cap = kDefaultDenseCap);

/// Commute time of each requested pair, evaluated from the factors in O(q)
/// per pair without forming N x N matrices.
std::vector<double> edge_commute_times(const LowRankFactors& factors, const PerronVector& pi,
                                       std::span<const Edge> edges);

/// exp(-c) on out-edges and in-edges, rescaled so each row's maximum is 1.
/// `commute_per_edge[k]` belongs to edge k of `g_original`.
ProximityWeights proximity_weights(std::span<const double> commute_per_edge,
                                   const DiGraph& g_original);

enum class DeltaNormalization { none, mean };

/// || a - b ||_2 / || a ||_2, optionally after dividing each vector by its mean.
double commute_change_delta(std::span<const double> c_orig, std::span<const double> c_rew,
                            DeltaNormalization normalization = DeltaNormalization::none);

}  // namespace cgnn
