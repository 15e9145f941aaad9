#pragma once

// End-to-end orchestration: rewire, Perron vector, DiLap, pseudoinverse
// factors, per-edge commute times, proximity weights, training and
// evaluation, with every artifact written under one output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cgnn/commute.hpp"
#include "cgnn/graph.hpp"
#include "cgnn/io.hpp"
#include "cgnn/model.hpp"
#include "cgnn/rewiring.hpp"
#include "cgnn/spectral.hpp"

namespace cgnn {

/// An error raised inside a named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// rewire: similarity rewiring of the input graph.
/// ppr: teleporting walk on the self-looped input graph instead of rewiring.
/// sym: rewiring applied to the symmetrized input graph.
enum class Variant { rewire, ppr, sym };

const char* to_string(Variant v);
Variant parse_variant(std::string_view name);

struct RunConfig {
  io::DatasetPaths paths;
  TrainConfig train;
  std::size_t dense_cap = 500;  // largest N for any dense N x N path
  std::filesystem::path out_dir = "out";
  Variant variant = Variant::rewire;
  double ppr_gamma = 0.85;
  SvdOptions svd;

  void validate() const;
  /// Set one field from its config-file key (dashes and underscores are interchangeable).
  void set(std::string_view key, std::string_view value);
  /// Fixed-order "key = value" dump of every field except out_dir.
  std::string canonical() const;
  /// FNV-1a 64 over canonical().
  std::uint64_t hash() const;
};

/// Reads "key = value" lines ('#' comments). Relative paths resolve against `base_dir`.
RunConfig read_run_config(std::istream& is, const std::filesystem::path& base_dir = {},
                          const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& file);

struct ProximityResult {
  DiGraph walk_graph;       // graph whose random walk defines the commute times
  std::vector<Edge> added_edges;
  PerronVector pi;
  std::optional<LowRankFactors> factors;  // dilap backend only
  double weighted_dilap_trace = 0.0;
  std::vector<double> commute;  // aligned with the original graph's edges
  ProximityWeights weights;
};

/// Steps up to and including the proximity weights. Throws StageError.
ProximityResult compute_proximity(const DiGraph& g, const FeatureMatrix& x, const RunConfig& cfg);

struct RunSummary {
  ProximityResult proximity;
  TrainResult training;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<std::filesystem::path> files;  // relative to out_dir
};

/// Loads cfg.paths, then runs every stage and writes the artifacts.
RunSummary run_pipeline(const RunConfig& cfg);
RunSummary run_pipeline(const io::Dataset& data, const RunConfig& cfg);

/// Commute-change ratio over all node pairs of the original graph's largest
/// strongly connected component, using dense Markov-chain commute times on
/// that component and on the walk graph, each divided by its mean. Empty when
/// the component has fewer than two nodes.
std::optional<double> lscc_commute_delta(const DiGraph& g, const DiGraph& walk_graph,
                                         std::size_t dense_cap = 500);

/// Writes the provenance record (seed, config hash, backend, variant, config dump).
void write_provenance(std::ostream& os, const RunConfig& cfg);
/// Writes out_dir/manifest.txt listing `files` and returns its name.
std::filesystem::path write_manifest(const std::filesystem::path& out_dir,
                                     const std::vector<std::filesystem::path>& files);

}  // namespace cgnn
