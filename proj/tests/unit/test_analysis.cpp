#include <doctest.h>

#include <random>
#include <sstream>

#include "cgnn/analysis.hpp"
#include "oracles.hpp"

using namespace cgnn;

TEST_SUITE("analysis") {

TEST_CASE("label similarity matrix") {
  const std::vector<Edge> e{{0, 1}};
  const auto g = DiGraph::build(2, e);
  const auto same = label_similarity_matrix(g, {3, 3});
  CHECK(same.coeff(0, 1) == 1.0);
  CHECK(same.coeff(1, 0) == 1.0);
  CHECK(label_similarity_matrix(g, {0, 1}).nonZeros() == 0);
  CHECK(label_similarity_matrix(DiGraph::build(3, std::span<const Edge>{}), {0, 0, 0}).nonZeros() == 0);
  CHECK_THROWS(label_similarity_matrix(g, {0}));

  const auto r = testing_oracle::random_digraph(20, 0.2, 1);
  LabelVector labels(20);
  for (std::size_t i = 0; i < 20; ++i) labels[i] = static_cast<int>(i % 3);
  const Eigen::MatrixXd m = Eigen::MatrixXd(label_similarity_matrix(r, labels));
  CHECK(m == m.transpose());
  CHECK(m.maxCoeff() <= 1.0);
}

TEST_CASE("heterophily distances") {
  const auto g = testing_oracle::random_digraph(15, 0.2, 2);
  const LabelVector all_same(15, 1);
  const auto ones = ProximityWeights::uniform(g.num_edges());
  const auto d = heterophily_distances(label_similarity_matrix(g, all_same), g, ones);
  CHECK(d.dist_proximity == d.dist_adjacency);

  // no mutual edges and all same label: M equals A + A^T exactly
  const std::vector<Edge> path{{0, 1}, {1, 2}, {2, 3}};
  const auto pg = DiGraph::build(4, path);
  CHECK(heterophily_distances(label_similarity_matrix(pg, {0, 0, 0, 0}), pg,
                              ProximityWeights::uniform(3)).dist_adjacency == 0.0);

  // brute force over the dense matrices
  LabelVector mixed(15);
  for (std::size_t i = 0; i < 15; ++i) mixed[i] = static_cast<int>(i % 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  ProximityWeights w{std::vector<double>(g.num_edges()), std::vector<double>(g.num_edges())};
  for (auto& v : w.out_weight) v = u(rng);
  for (auto& v : w.in_weight) v = u(rng);
  const Eigen::MatrixXd m = Eigen::MatrixXd(label_similarity_matrix(g, mixed));
  const Eigen::MatrixXd a = testing_oracle::dense_adjacency(g);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(15, 15);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    c(g.edge(k).src, g.edge(k).dst) += w.out_weight[k];
    c(g.edge(k).dst, g.edge(k).src) += w.in_weight[k];
  }
  const auto dd = heterophily_distances(label_similarity_matrix(g, mixed), g, w);
  CHECK(dd.dist_adjacency == doctest::Approx((m - a - a.transpose()).squaredNorm()));
  CHECK(dd.dist_proximity == doctest::Approx((m - c).squaredNorm()));
}

TEST_CASE("homophily ratio") {
  const std::vector<Edge> e{{0, 1}, {1, 2}};
  const auto g = DiGraph::build(3, e);
  CHECK(homophily_ratio(g, {1, 1, 1}) == 1.0);
  CHECK(homophily_ratio(g, {0, 1, 0}) == 0.0);
  CHECK(homophily_ratio(g, {0, 0, 1}) == 0.5);
  CHECK_THROWS(homophily_ratio(DiGraph::build(2, std::span<const Edge>{}), {0, 1}));

  const auto r = testing_oracle::random_digraph(25, 0.15, 4);
  LabelVector labels(25);
  for (std::size_t i = 0; i < 25; ++i) labels[i] = static_cast<int>((i * 7) % 4);
  const double h = homophily_ratio(r, labels);
  CHECK(h >= 0.0);
  CHECK(h <= 1.0);
  std::mt19937_64 rng(2);
  const auto raw = testing_oracle::random_permutation(25, rng);
  std::vector<NodeId> perm(raw.begin(), raw.end());
  LabelVector moved(25);
  for (std::size_t i = 0; i < 25; ++i) moved[raw[i]] = labels[i];
  CHECK(homophily_ratio(permute(r, perm, std::nullopt), moved) == h);
}

TEST_CASE("report and edge table") {
  DiagnosticsReport r;
  r.dist_adjacency = 4;
  r.dist_proximity = 2.5;
  r.homophily = 0.75;
  r.commute_delta = 0.125;
  std::ostringstream os;
  write_report(os, r);
  CHECK(os.str() == "dist_adjacency = 4\ndist_proximity = 2.5\nhomophily = 0.75\ncommute_delta = 0.125\n");

  const std::vector<Edge> e{{0, 1}};
  std::ostringstream t;
  write_edge_table(t, DiGraph::build(2, e), {0, 0}, ProximityWeights{{1.0}, {0.5}});
  CHECK(t.str() == "src\tdst\tsame_label\tout_weight\tin_weight\n0\t1\t1\t1\t0.5\n");
}

}  // TEST_SUITE
