#pragma once

// Plain-text file formats (edge lists, features, labels, splits, model
// checkpoints, per-edge weight tables), dataset loading and validation, and
// seeded synthetic dataset generators.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgnn/commute.hpp"
#include "cgnn/graph.hpp"
#include "cgnn/model.hpp"

namespace cgnn::io {

/// Parse failure; the message carries "source:line: ".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Dataset {
  DiGraph graph;
  Eigen::MatrixXd features;
  LabelVector labels;
  SplitAssignment splits;

  std::size_t num_nodes() const { return graph.num_nodes(); }
  /// Consistent N across parts, disjoint in-range splits.
  void validate() const;
};

struct DatasetPaths {
  std::filesystem::path graph, features, labels, splits;
};

// Edge list: "src<TAB>dst" per line, '#' starts a comment, 0-based ids.
std::vector<Edge> read_edges(std::istream& is, const std::string& source = "<edges>");
void write_edges(std::ostream& os, std::span<const Edge> edges);

// Features: header "N d", then N rows of d decimals.
Eigen::MatrixXd read_features(std::istream& is, const std::string& source = "<features>");
void write_features(std::ostream& os, const Eigen::MatrixXd& x);

// Labels: "node<TAB>label"; every node in [0, N) must appear exactly once.
LabelVector read_labels(std::istream& is, std::size_t num_nodes,
                        const std::string& source = "<labels>");
void write_labels(std::ostream& os, const LabelVector& labels);

// Splits: "node<TAB>{train|val|test}".
SplitAssignment read_splits(std::istream& is, std::size_t num_nodes,
                            const std::string& source = "<splits>");
void write_splits(std::ostream& os, const SplitAssignment& splits);

Dataset load_dataset(const DatasetPaths& paths);
/// Writes graph.tsv, features.txt, labels.tsv, splits.tsv; returns the paths.
DatasetPaths save_dataset(const Dataset& data, const std::filesystem::path& dir);

// Checkpoint: versioned text; header with dimensions and seed, then one
// "param <name> <rows> <cols>" line per block followed by row-major values.
void write_checkpoint(std::ostream& os, const ModelParams& params);
ModelParams read_checkpoint(std::istream& is, const std::string& source = "<checkpoint>");

// Per-edge tables keyed by (src, dst) of the original graph.
void write_proximity_weights(std::ostream& os, const DiGraph& g, const ProximityWeights& w);
ProximityWeights read_proximity_weights(std::istream& is, const DiGraph& g,
                                        const std::string& source = "<weights>");
void write_edge_values(std::ostream& os, const DiGraph& g, std::span<const double> values,
                       const std::string& column);

void write_history(std::ostream& os, const std::vector<EpochRecord>& history);

enum class SyntheticKind { directed_cycle, two_block, random_digraph };

SyntheticKind parse_synthetic_kind(std::string_view name);
const char* to_string(SyntheticKind kind);

struct SyntheticParams {
  double p_in = 0.3;    // two_block intra-block edge probability
  double p_out = 0.02;  // two_block inter-block edge probability
  double p = 0.1;       // random_digraph edge probability
  Eigen::Index feature_dim = 8;
  double noise = 1.0;   // std-dev of Gaussian feature noise
  double train_fraction = 0.6;
  double val_fraction = 0.2;
};

/// Deterministic for a fixed seed. Splits are a seeded shuffle cut into
/// train/val/test by the configured fractions.
Dataset generate_synthetic(SyntheticKind kind, std::size_t n, const SyntheticParams& params,
                           std::uint64_t seed);

}  // namespace cgnn::io
