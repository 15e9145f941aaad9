#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "cgnn/analysis.hpp"
#include "cgnn/io.hpp"
#include "oracles.hpp"

using namespace cgnn;
namespace fs = std::filesystem;

#ifndef CGNN_FIXTURE_DIR
#error "CGNN_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace {

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cgnn_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

io::DatasetPaths minimal_paths() {
  const fs::path d = fs::path(CGNN_FIXTURE_DIR) / "minimal";
  return {d / "graph.tsv", d / "features.txt", d / "labels.tsv", d / "splits.tsv"};
}

std::size_t error_line(const std::function<void()>& f) {
  try {
    f();
  } catch (const io::ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("minimal fixture loads") {
  const auto d = io::load_dataset(minimal_paths());
  CHECK(d.num_nodes() == 2);
  CHECK(d.graph.num_edges() == 2);
  CHECK(d.labels == LabelVector{0, 1});
  CHECK(d.splits.train == std::vector<NodeId>{0});
  CHECK(d.splits.test == std::vector<NodeId>{1});
}

TEST_CASE("features with too few rows report a line number") {
  std::istringstream in("3 2\n1 2\n3 4\n");
  CHECK_THROWS_AS(io::read_features(in), io::ParseError);
  std::istringstream again("3 2\n1 2\n3 4\n");
  CHECK(error_line([&] { io::read_features(again); }) > 0);

  std::istringstream bad_value("2 2\n1 2\n3 x\n");
  CHECK(error_line([&] { io::read_features(bad_value); }) == 3);
  std::istringstream wide("1 2\n1 2 3\n");
  CHECK(error_line([&] { io::read_features(wide); }) == 2);
}

TEST_CASE("overlapping splits are rejected") {
  std::istringstream in("0\ttrain\n1\tval\n0\ttest\n");
  CHECK(error_line([&] { io::read_splits(in, 2); }) == 3);
  std::istringstream unknown("0\tholdout\n");
  CHECK_THROWS_AS(io::read_splits(unknown, 1), io::ParseError);

  io::Dataset d;
  d.graph = DiGraph::build(2, std::span<const Edge>{});
  d.features = Eigen::MatrixXd::Zero(2, 1);
  d.labels = {0, 1};
  d.splits.train = {0};
  d.splits.test = {0};
  CHECK_THROWS(d.validate());
}

TEST_CASE("edge list parsing") {
  std::istringstream in("# comment\n0\t1\n\n2 3  # trailing\n");
  CHECK(io::read_edges(in) == std::vector<Edge>{{0, 1}, {2, 3}});
  std::istringstream three("0 1 2\n");
  CHECK(error_line([&] { io::read_edges(three); }) == 1);
  std::istringstream neg("0 -1\n");
  CHECK_THROWS_AS(io::read_edges(neg), io::ParseError);
}

TEST_CASE("labels must cover every node once") {
  std::istringstream missing("0\t1\n");
  CHECK_THROWS_AS(io::read_labels(missing, 2), io::ParseError);
  std::istringstream twice("0\t1\n0\t0\n1\t0\n");
  CHECK(error_line([&] { io::read_labels(twice, 2); }) == 2);
  std::istringstream range("5\t1\n");
  CHECK_THROWS_AS(io::read_labels(range, 2), io::ParseError);
}

TEST_CASE("graph ids beyond the feature count are inconsistent") {
  const auto dir = fresh_dir("inconsistent");
  auto p = minimal_paths();
  std::ofstream(dir / "graph.tsv") << "0\t2\n";
  p.graph = dir / "graph.tsv";
  CHECK_THROWS(io::load_dataset(p));
}

TEST_CASE("dataset round trip through files") {
  io::SyntheticParams sp;
  const auto d = io::generate_synthetic(io::SyntheticKind::two_block, 30, sp, 5);
  const auto dir = fresh_dir("roundtrip");
  const auto loaded = io::load_dataset(io::save_dataset(d, dir));
  CHECK(loaded.graph == d.graph);
  CHECK(loaded.features == d.features);
  CHECK(loaded.labels == d.labels);
  CHECK(loaded.splits.train == d.splits.train);
  CHECK(loaded.splits.val == d.splits.val);
  CHECK(loaded.splits.test == d.splits.test);
}

TEST_CASE("checkpoint round trip is exact") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = ModelParams::init(5, 7, 1 + seed % 3, 3, seed, seed % 2 ? Activation::none : Activation::relu);
    for (auto& l : p.layers) l.bias.setRandom();
    p.head_b.setRandom();
    std::stringstream ss;
    io::write_checkpoint(ss, p);
    CHECK(io::read_checkpoint(ss) == p);
  }
}

TEST_CASE("checkpoint errors") {
  std::istringstream junk("hello\n");
  CHECK_THROWS_AS(io::read_checkpoint(junk), io::ParseError);

  const auto p = ModelParams::init(2, 2, 1, 2, 0);
  std::stringstream ss;
  io::write_checkpoint(ss, p);
  std::string text = ss.str();
  text.resize(text.size() - 6);
  std::istringstream cut(text);
  CHECK_THROWS_AS(io::read_checkpoint(cut), io::ParseError);

  std::string wrong = ss.str();
  wrong.replace(wrong.find("cgnn-checkpoint 1"), 17, "cgnn-checkpoint 9");
  std::istringstream ver(wrong);
  CHECK_THROWS_AS(io::read_checkpoint(ver), io::ParseError);
}

TEST_CASE("proximity weight table round trip") {
  const auto g = testing_oracle::random_digraph(12, 0.3, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1e-300, 1.0);
  ProximityWeights w{std::vector<double>(g.num_edges()), std::vector<double>(g.num_edges())};
  for (auto& v : w.out_weight) v = u(rng);
  for (auto& v : w.in_weight) v = u(rng);
  std::stringstream ss;
  io::write_proximity_weights(ss, g, w);
  const auto back = io::read_proximity_weights(ss, g);
  CHECK(back.out_weight == w.out_weight);
  CHECK(back.in_weight == w.in_weight);

  std::istringstream missing("src\tdst\tout_weight\tin_weight\n");
  CHECK_THROWS_AS(io::read_proximity_weights(missing, g), io::ParseError);
}

TEST_CASE("directed cycle generator") {
  const auto d = io::generate_synthetic(io::SyntheticKind::directed_cycle, 4, {}, 0);
  const std::vector<Edge> expected{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  CHECK(std::vector<Edge>(d.graph.edges().begin(), d.graph.edges().end()) == expected);
}

TEST_CASE("two-block generator is homophilous and seeded") {
  io::SyntheticParams sp;
  sp.p_in = 0.3;
  sp.p_out = 0.02;
  const auto d = io::generate_synthetic(io::SyntheticKind::two_block, 40, sp, 7);
  const double h = homophily_ratio(d.graph, d.labels);
  CHECK(h > 0.8);
  // golden: 223 of the 242 generated edges join same-block nodes
  CHECK(d.graph.num_edges() == 242);
  CHECK(h == doctest::Approx(223.0 / 242.0).epsilon(1e-12));
  const auto again = io::generate_synthetic(io::SyntheticKind::two_block, 40, sp, 7);
  CHECK(again.graph == d.graph);
  CHECK(again.features == d.features);
  CHECK(again.splits.test == d.splits.test);
  CHECK_FALSE(io::generate_synthetic(io::SyntheticKind::two_block, 40, sp, 8).graph == d.graph);
}

TEST_CASE("random digraph with p = 1 is complete") {
  io::SyntheticParams sp;
  sp.p = 1.0;
  const auto d = io::generate_synthetic(io::SyntheticKind::random_digraph, 6, sp, 1);
  CHECK(d.graph.num_edges() == 30);
  for (NodeId i = 0; i < 6; ++i) CHECK_FALSE(d.graph.has_self_loop(i));
}

TEST_CASE("generator rejects invalid parameters") {
  io::SyntheticParams sp;
  CHECK_THROWS(io::generate_synthetic(io::SyntheticKind::two_block, 1, sp, 0));
  sp.p_in = 1.5;
  CHECK_THROWS(io::generate_synthetic(io::SyntheticKind::two_block, 10, sp, 0));
  CHECK_THROWS(io::parse_synthetic_kind("lattice"));
}

}  // TEST_SUITE
