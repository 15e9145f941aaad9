#include "cgnn/commute.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

namespace cgnn {

const char* to_string(CommuteBackend backend) {
  switch (backend) {
    case CommuteBackend::dilap: return "dilap";
    case CommuteBackend::dense_oracle: return "dense_oracle";
  }
  return "unknown";
}

CommuteBackend parse_backend(std::string_view name) {
  if (name == "dilap") return CommuteBackend::dilap;
  if (name == "dense_oracle") return CommuteBackend::dense_oracle;
  throw CommuteError("unknown commute backend '" + std::string(name) +
                     "' (expected dilap or dense_oracle)");
}

namespace {

void check_pi(const Eigen::VectorXd& pi) {
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (!(pi(i) > 0.0)) {
      throw CommuteError("Perron vector entry " + std::to_string(i) + " is not positive");
    }
  }
}

}  // namespace

Eigen::MatrixXd fundamental_matrix_from_dilap(const DiLapMatrix& t, std::size_t dense_cap) {
  const auto n = static_cast<std::size_t>(t.matrix.rows());
  if (n > dense_cap) {
    throw CommuteError("dense fundamental matrix requested for N = " + std::to_string(n) +
                       " > cap " + std::to_string(dense_cap) + "; use per-edge low-rank queries");
  }
  const Eigen::MatrixXd dense = Eigen::MatrixXd(t.matrix);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  const double top = s.size() > 0 ? s(0) : 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (top > 0.0 && s(k) >= kPinvRelativeCutoff * top) inv(k) = 1.0 / s(k);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

CommuteMatrices hitting_commute_closed_form(const Eigen::MatrixXd& t_pinv, const PerronVector& pi) {
  const auto n = t_pinv.rows();
  if (t_pinv.cols() != n || pi.pi.size() != n) {
    throw CommuteError("hitting_commute_closed_form: dimension mismatch");
  }
  check_pi(pi.pi);
  CommuteMatrices out;
  out.hitting.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.hitting(i, j) = i == j ? 0.0
                                 : t_pinv(j, j) / pi.pi(j) -
                                       t_pinv(i, j) / std::sqrt(pi.pi(i) * pi.pi(j));
    }
  }
  out.commute = out.hitting + out.hitting.transpose();
  return out;
}

CommuteMatrices hitting_commute_closed_form(const LowRankFactors& factors, const PerronVector& pi,
                                            std::size_t dense_cap) {
  if (static_cast<std::size_t>(factors.u.rows()) > dense_cap) {
    throw CommuteError("dense commute matrices requested above the cap; use edge_commute_times");
  }
  return hitting_commute_closed_form(factors.pinv_dense(), pi);
}

std::vector<double> edge_commute_times(const LowRankFactors& factors, const PerronVector& pi,
                                       std::span<const Edge> edges) {
  const auto n = factors.u.rows();
  if (pi.pi.size() != n) throw CommuteError("edge_commute_times: Perron vector length mismatch");
  check_pi(pi.pi);
  const Eigen::VectorXd inv_sqrt = pi.pi.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd inv_sigma = factors.sigma.cwiseInverse();

  // c(i, j) = x^T V diag(1/sigma) U^T x with x = e_i / sqrt(pi_i) - e_j / sqrt(pi_j).
  std::vector<double> out;
  out.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n) {
      throw CommuteError("edge_commute_times: node id out of range");
    }
    if (e.src == e.dst) {
      out.push_back(0.0);
      continue;
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < factors.sigma.size(); ++k) {
      const double xv = factors.v(e.src, k) * inv_sqrt(e.src) - factors.v(e.dst, k) * inv_sqrt(e.dst);
      const double xu = factors.u(e.src, k) * inv_sqrt(e.src) - factors.u(e.dst, k) * inv_sqrt(e.dst);
      acc += xv * xu * inv_sigma(k);
    }
    out.push_back(acc);
  }
  return out;
}

ProximityWeights proximity_weights(std::span<const double> commute_per_edge,
                                   const DiGraph& g_original) {
  const std::size_t m = g_original.num_edges();
  if (commute_per_edge.size() != m) {
    throw CommuteError("proximity_weights: " + std::to_string(commute_per_edge.size()) +
                       " commute values for " + std::to_string(m) + " edges");
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!std::isfinite(commute_per_edge[k])) {
      throw CommuteError("proximity_weights: missing commute value for edge " + std::to_string(k));
    }
  }

  // exp(-(c - row_min)) equals exp(-c) after row-max normalization; the
  // clamp keeps weights strictly positive when the gap underflows.
  auto row_weights = [&](std::span<const std::size_t> row, std::vector<double>& dest) {
    if (row.empty()) return;
    double lo = std::numeric_limits<double>::infinity();
    for (auto k : row) lo = std::min(lo, commute_per_edge[k]);
    for (auto k : row) {
      dest[k] = std::max(std::exp(-(commute_per_edge[k] - lo)), std::numeric_limits<double>::min());
    }
  };

  ProximityWeights out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (std::size_t i = 0; i < g_original.num_nodes(); ++i) {
    const auto node = static_cast<NodeId>(i);
    row_weights(g_original.out_edges(node), out.out_weight);
    row_weights(g_original.in_edges(node), out.in_weight);
  }
  return out;
}

double commute_change_delta(std::span<const double> c_orig, std::span<const double> c_rew,
                            DeltaNormalization normalization) {
  if (c_orig.size() != c_rew.size()) {
    throw CommuteError("commute_change_delta: inputs cover different pair sets");
  }
  if (c_orig.empty()) throw CommuteError("commute_change_delta: empty input");
  Eigen::Map<const Eigen::VectorXd> a(c_orig.data(), static_cast<Eigen::Index>(c_orig.size()));
  Eigen::Map<const Eigen::VectorXd> b(c_rew.data(), static_cast<Eigen::Index>(c_rew.size()));
  Eigen::VectorXd na = a, nb = b;
  if (normalization == DeltaNormalization::mean) {
    const double ma = a.mean(), mb = b.mean();
    if (ma == 0.0 || mb == 0.0) throw CommuteError("commute_change_delta: zero mean commute time");
    na /= ma;
    nb /= mb;
  }
  const double denom = na.norm();
  if (denom == 0.0) throw CommuteError("commute_change_delta: zero-norm reference vector");
  return (na - nb).norm() / denom;
}

}  // namespace cgnn
