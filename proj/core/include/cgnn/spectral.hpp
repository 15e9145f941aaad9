#pragma once

// Stationary distribution, the digraph Laplacian T = B diag(P_e) B^T and its
// Perron-weighted form, and a randomized truncated SVD used to apply T^+.

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cgnn/graph.hpp"

namespace cgnn {

class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct PerronVector {
  Eigen::VectorXd pi;
  std::size_t iterations_used = 0;
  double residual = 0.0;  // || pi^T P - pi^T ||_1
};

struct DiLapMatrix {
  SparseMatrix matrix;
  bool weighted = false;
};

/// Rank-q factorization A ~= U diag(sigma) V^T with orthonormal columns.
struct LowRankFactors {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;

  std::size_t rank_q() const { return static_cast<std::size_t>(sigma.size()); }

  Eigen::MatrixXd reconstruct() const;
  /// Entry (i, j) of V diag(1/sigma) U^T.
  double pinv_entry(Eigen::Index i, Eigen::Index j) const;
  Eigen::MatrixXd pinv_dense() const;
};

struct PerronOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
};

/// Power iteration on P^T from the uniform vector.
PerronVector perron_vector(const StochasticMatrix& p, const PerronOptions& opts = {});

/// Sparse assembly of B diag({P_ij}) B^T. Contributions are summed in
/// (src, dst) order, so the result does not depend on edge indexing.
DiLapMatrix dilap(const DiGraph& g, const StochasticMatrix& p);

/// Pi * T: row i scaled by pi_i.
DiLapMatrix weighted_dilap(const DiLapMatrix& t, const PerronVector& pi);

struct SvdOptions {
  std::size_t oversample = 8;  // clipped to N - q
  std::size_t power_iterations = 2;
};

/// Randomized range finder with subspace iteration followed by a dense SVD
/// of the projected matrix. Deterministic for a fixed seed.
LowRankFactors randomized_truncated_svd(const SparseMatrix& m, std::size_t q, std::uint64_t seed,
                                        const SvdOptions& opts = {});

/// Singular values below this fraction of the largest are not inverted.
inline constexpr double kPinvRelativeCutoff = 1e-10;

/// Truncated SVD of T with noise-level singular triplets removed; the
/// returned factors represent T^+ = V diag(1/sigma) U^T.
LowRankFactors pseudoinverse_factors(const DiLapMatrix& t, std::size_t q, std::uint64_t seed,
                                     const SvdOptions& opts = {});

}  // namespace cgnn
