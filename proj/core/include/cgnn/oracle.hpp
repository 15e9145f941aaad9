#pragma once

// Ground-truth Markov-chain computations used to validate the Laplacian
// route: the fundamental matrix by dense solve and by truncated series,
// hitting times from Z, Monte Carlo first-passage simulation, and the
// PageRank-style teleporting transition matrix.

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "cgnn/commute.hpp"
#include "cgnn/graph.hpp"
#include "cgnn/spectral.hpp"

namespace cgnn::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kOracleCap = 500;
inline constexpr std::size_t kDefaultMaxSteps = 1'000'000;
/// Two-sided 99% normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

enum class Method { series, dense, monte_carlo };

struct MonteCarloEstimate {
  double mean = 0.0;
  double half_width_99 = 0.0;
  std::size_t walks = 0;
  std::size_t censored = 0;
  std::uint64_t seed = 0;
};

struct OracleReport {
  Method method = Method::dense;
  NodeId src = 0;
  NodeId dst = 0;
  double value = 0.0;
  double error_bound = 0.0;  // MC: 99% half-width; series: last-term max-abs
  std::size_t walks = 0;
  std::size_t censored = 0;
  std::uint64_t seed = 0;
};

/// Stationary distribution from a dense solve of pi^T (I - P) = 0, sum pi = 1.
/// Works for periodic irreducible chains too.
Eigen::VectorXd stationary_dense(const StochasticMatrix& p);
Eigen::VectorXd stationary_dense(const Eigen::MatrixXd& p);

/// Z = (I - P + e pi^T)^{-1} - e pi^T.
Eigen::MatrixXd dense_fundamental(const StochasticMatrix& p, const Eigen::VectorXd& pi);
Eigen::MatrixXd dense_fundamental(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi);

/// sum_{t=0}^{t_max} (P^t - e pi^T).
Eigen::MatrixXd series_fundamental(const StochasticMatrix& p, const Eigen::VectorXd& pi,
                                   std::size_t t_max);

/// h(i, j) = (Z_jj - Z_ij) / pi_j, c = h + h^T.
CommuteMatrices hitting_from_z(const Eigen::MatrixXd& z, const Eigen::VectorXd& pi);

/// Mean first-passage steps from src to dst over seeded walks. Walk w draws
/// from its own generator seeded by (seed, w), so the estimate does not depend
/// on how walks are scheduled.
MonteCarloEstimate monte_carlo_hitting(const StochasticMatrix& p, NodeId src, NodeId dst,
                                       std::size_t walks, std::size_t max_steps,
                                       std::uint64_t seed);

OracleReport report(const MonteCarloEstimate& estimate, NodeId src, NodeId dst);

/// gamma P + (1 - gamma) e e^T / N, dense.
Eigen::MatrixXd ppr_transition(const StochasticMatrix& p, double gamma);

/// Commute times for the listed pairs via the dense fundamental matrix.
std::vector<double> pair_commute_times(const StochasticMatrix& p, std::span<const Edge> pairs,
                                       std::size_t cap = kOracleCap);

}  // namespace cgnn::oracle
