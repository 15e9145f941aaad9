#include "cgnn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>

namespace cgnn::oracle {

namespace {

void check_cap(Eigen::Index n, std::size_t cap) {
  if (static_cast<std::size_t>(n) > cap) {
    throw OracleError("oracle: N = " + std::to_string(n) + " exceeds dense cap " +
                      std::to_string(cap));
  }
}

void check_pi(const Eigen::VectorXd& pi) {
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (!(pi(i) > 0.0)) {
      throw OracleError("oracle: stationary entry " + std::to_string(i) + " is not positive");
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Eigen::VectorXd stationary_dense(const Eigen::MatrixXd& p) {
  const auto n = p.rows();
  check_cap(n, kOracleCap);
  // Replace one balance equation with the normalization constraint.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - p.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw OracleError("stationary_dense: chain is reducible");
  return lu.solve(rhs);
}

Eigen::VectorXd stationary_dense(const StochasticMatrix& p) {
  check_cap(p.matrix.rows(), kOracleCap);
  return stationary_dense(Eigen::MatrixXd(p.matrix));
}

Eigen::MatrixXd dense_fundamental(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi) {
  const auto n = p.rows();
  check_cap(n, kOracleCap);
  if (p.cols() != n || pi.size() != n) throw OracleError("dense_fundamental: dimension mismatch");
  const Eigen::MatrixXd e_pi = Eigen::VectorXd::Ones(n) * pi.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - p + e_pi);
  if (!lu.isInvertible()) {
    throw OracleError("dense_fundamental: I - P + J Pi is singular (chain not irreducible?)");
  }
  return lu.inverse() - e_pi;
}

Eigen::MatrixXd dense_fundamental(const StochasticMatrix& p, const Eigen::VectorXd& pi) {
  check_cap(p.matrix.rows(), kOracleCap);
  return dense_fundamental(Eigen::MatrixXd(p.matrix), pi);
}

Eigen::MatrixXd series_fundamental(const StochasticMatrix& p, const Eigen::VectorXd& pi,
                                   std::size_t t_max) {
  const auto n = p.matrix.rows();
  check_cap(n, kOracleCap);
  const Eigen::MatrixXd dense_p(p.matrix);
  const Eigen::MatrixXd e_pi = Eigen::VectorXd::Ones(n) * pi.transpose();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = power - e_pi;
  for (std::size_t t = 1; t <= t_max; ++t) {
    power = power * dense_p;
    sum += power - e_pi;
  }
  return sum;
}

CommuteMatrices hitting_from_z(const Eigen::MatrixXd& z, const Eigen::VectorXd& pi) {
  const auto n = z.rows();
  if (z.cols() != n || pi.size() != n) throw OracleError("hitting_from_z: dimension mismatch");
  check_pi(pi);
  CommuteMatrices out;
  out.hitting.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.hitting(i, j) = i == j ? 0.0 : (z(j, j) - z(i, j)) / pi(j);
    }
  }
  out.commute = out.hitting + out.hitting.transpose();
  return out;
}

MonteCarloEstimate monte_carlo_hitting(const StochasticMatrix& p, NodeId src, NodeId dst,
                                       std::size_t walks, std::size_t max_steps,
                                       std::uint64_t seed) {
  const auto n = p.matrix.rows();
  if (walks == 0) throw OracleError("monte_carlo_hitting: walks must be >= 1");
  if (src < 0 || dst < 0 || src >= n || dst >= n) {
    throw OracleError("monte_carlo_hitting: node id out of range");
  }
  MonteCarloEstimate est;
  est.walks = walks;
  est.seed = seed;
  if (src == dst) return est;

  // Per-row cumulative distribution over the CSR layout.
  const auto& m = p.matrix;
  std::vector<double> cumulative(static_cast<std::size_t>(m.nonZeros()));
  for (Eigen::Index r = 0; r < n; ++r) {
    double acc = 0.0;
    for (auto k = m.outerIndexPtr()[r]; k < m.outerIndexPtr()[r + 1]; ++k) {
      acc += m.valuePtr()[k];
      cumulative[static_cast<std::size_t>(k)] = acc;
    }
  }

  double sum = 0.0, sum_sq = 0.0;
  std::size_t finished = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t w = 0; w < walks; ++w) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(w)));
    NodeId at = src;
    std::size_t steps = 0;
    while (at != dst && steps < max_steps) {
      const auto begin = m.outerIndexPtr()[at];
      const auto end = m.outerIndexPtr()[at + 1];
      if (begin == end) break;  // absorbing; walk is censored
      const double u = unit(rng) * cumulative[static_cast<std::size_t>(end - 1)];
      auto it = std::upper_bound(cumulative.begin() + begin, cumulative.begin() + end, u);
      if (it == cumulative.begin() + end) --it;
      at = m.innerIndexPtr()[it - cumulative.begin()];
      ++steps;
    }
    if (at == dst) {
      const auto s = static_cast<double>(steps);
      sum += s;
      sum_sq += s * s;
      ++finished;
    } else {
      ++est.censored;
    }
  }
  if (finished == 0) {
    throw OracleError("monte_carlo_hitting: destination " + std::to_string(dst) +
                      " not reached within " + std::to_string(max_steps) + " steps by any walk");
  }
  const auto k = static_cast<double>(finished);
  est.mean = sum / k;
  const double var = finished > 1 ? std::max(0.0, (sum_sq - k * est.mean * est.mean) / (k - 1.0)) : 0.0;
  est.half_width_99 = kZ99 * std::sqrt(var / k);
  return est;
}

OracleReport report(const MonteCarloEstimate& estimate, NodeId src, NodeId dst) {
  OracleReport r;
  r.method = Method::monte_carlo;
  r.src = src;
  r.dst = dst;
  r.value = estimate.mean;
  r.error_bound = estimate.half_width_99;
  r.walks = estimate.walks;
  r.censored = estimate.censored;
  r.seed = estimate.seed;
  return r;
}

Eigen::MatrixXd ppr_transition(const StochasticMatrix& p, double gamma) {
  const auto n = p.matrix.rows();
  check_cap(n, kOracleCap);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw OracleError("ppr_transition: gamma outside [0, 1]");
  Eigen::MatrixXd out = gamma * Eigen::MatrixXd(p.matrix);
  out.array() += (1.0 - gamma) / static_cast<double>(n);
  return out;
}

std::vector<double> pair_commute_times(const StochasticMatrix& p, std::span<const Edge> pairs,
                                       std::size_t cap) {
  check_cap(p.matrix.rows(), std::min(cap, kOracleCap));
  const Eigen::VectorXd pi = stationary_dense(p);
  const auto ct = hitting_from_z(dense_fundamental(p, pi), pi);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& e : pairs) out.push_back(ct.commute(e.src, e.dst));
  return out;
}

}  // namespace cgnn::oracle
