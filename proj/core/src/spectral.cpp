#include "cgnn/spectral.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace cgnn {

Eigen::MatrixXd LowRankFactors::reconstruct() const {
  return u * sigma.asDiagonal() * v.transpose();
}

double LowRankFactors::pinv_entry(Eigen::Index i, Eigen::Index j) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) acc += v(i, k) * u(j, k) / sigma(k);
  return acc;
}

Eigen::MatrixXd LowRankFactors::pinv_dense() const {
  return v * sigma.cwiseInverse().asDiagonal() * u.transpose();
}

PerronVector perron_vector(const StochasticMatrix& p, const PerronOptions& opts) {
  const auto n = p.matrix.rows();
  if (n == 0) throw SpectralError("perron_vector: empty transition matrix");
  const SparseMatrix pt = p.matrix.transpose();

  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    next = pt * pi;
    next /= next.sum();
    const double step = (next - pi).lpNorm<1>();
    pi.swap(next);
    if (step <= opts.tol) {
      PerronVector out;
      out.residual = ((pt * pi) - pi).lpNorm<1>();
      out.pi = std::move(pi);
      out.iterations_used = it;
      return out;
    }
  }
  throw SpectralError("perron_vector: power iteration did not converge in " +
                      std::to_string(opts.max_iter) +
                      " iterations (chain is not irreducible and aperiodic?)");
}

DiLapMatrix dilap(const DiGraph& g, const StochasticMatrix& p) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (p.matrix.rows() != n || p.matrix.cols() != n) {
    throw SpectralError("dilap: transition matrix size does not match graph");
  }
  if (static_cast<std::size_t>(p.matrix.nonZeros()) != g.num_edges()) {
    throw SpectralError("dilap: transition matrix pattern does not match graph edges");
  }

  // (row, col, contributing edge, value); sorting on the edge key makes the
  // floating-point summation order independent of edge indices.
  using Contribution = std::tuple<NodeId, NodeId, Edge, double>;
  std::vector<Contribution> parts;
  parts.reserve(4 * g.num_edges());
  for (const auto& e : g.edges()) {
    const double w = p.matrix.coeff(e.src, e.dst);
    if (w == 0.0) {
      throw SpectralError("dilap: edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                          ") has no transition probability");
    }
    if (e.src == e.dst) continue;
    parts.emplace_back(e.src, e.src, e, w);
    parts.emplace_back(e.dst, e.dst, e, w);
    parts.emplace_back(e.src, e.dst, e, -w);
    parts.emplace_back(e.dst, e.src, e, -w);
  }
  std::sort(parts.begin(), parts.end(), [](const Contribution& a, const Contribution& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });

  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t k = 0; k < parts.size();) {
    const auto row = std::get<0>(parts[k]);
    const auto col = std::get<1>(parts[k]);
    double acc = 0.0;
    for (; k < parts.size() && std::get<0>(parts[k]) == row && std::get<1>(parts[k]) == col; ++k) {
      acc += std::get<3>(parts[k]);
    }
    triplets.emplace_back(row, col, acc);
  }
  DiLapMatrix out;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

DiLapMatrix weighted_dilap(const DiLapMatrix& t, const PerronVector& pi) {
  if (pi.pi.size() != t.matrix.rows()) {
    throw SpectralError("weighted_dilap: Perron vector length does not match operator");
  }
  DiLapMatrix out;
  out.matrix = pi.pi.asDiagonal() * t.matrix;
  out.weighted = true;
  return out;
}

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

LowRankFactors randomized_truncated_svd(const SparseMatrix& m, std::size_t q, std::uint64_t seed,
                                        const SvdOptions& opts) {
  const auto rows = static_cast<std::size_t>(m.rows());
  const auto cols = static_cast<std::size_t>(m.cols());
  const std::size_t dim = std::min(rows, cols);
  if (q == 0 || q > dim) {
    throw SpectralError("randomized_truncated_svd: rank q = " + std::to_string(q) +
                        " outside [1, " + std::to_string(dim) + "]");
  }
  const auto sketch = static_cast<Eigen::Index>(q + std::min(opts.oversample, dim - q));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd omega(static_cast<Eigen::Index>(cols), sketch);
  for (Eigen::Index j = 0; j < omega.cols(); ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = normal(rng);
  }

  const SparseMatrix mt = m.transpose();
  Eigen::MatrixXd basis = orthonormal_basis(m * omega);
  for (std::size_t it = 0; it < opts.power_iterations; ++it) {
    Eigen::MatrixXd z = orthonormal_basis(mt * basis);
    basis = orthonormal_basis(m * z);
  }

  // B = Q^T M, formed as (M^T Q)^T to stay on sparse-dense products.
  const Eigen::MatrixXd projected = (mt * basis).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(projected, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const auto keep = static_cast<Eigen::Index>(q);
  LowRankFactors out;
  out.u = basis * svd.matrixU().leftCols(keep);
  out.sigma = svd.singularValues().head(keep);
  out.v = svd.matrixV().leftCols(keep);
  return out;
}

LowRankFactors pseudoinverse_factors(const DiLapMatrix& t, std::size_t q, std::uint64_t seed,
                                     const SvdOptions& opts) {
  LowRankFactors f = randomized_truncated_svd(t.matrix, q, seed, opts);
  const double top = f.sigma.size() > 0 ? f.sigma(0) : 0.0;
  Eigen::Index keep = 0;
  while (keep < f.sigma.size() && top > 0.0 && f.sigma(keep) >= kPinvRelativeCutoff * top) ++keep;
  if (keep == 0) {
    throw SpectralError("pseudoinverse_factors: every singular value is below the cutoff "
                        "(degenerate operator)");
  }
  LowRankFactors out;
  out.u = f.u.leftCols(keep);
  out.sigma = f.sigma.head(keep);
  out.v = f.v.leftCols(keep);
  return out;
}

}  // namespace cgnn
