#pragma once

// Commute-weighted direction-aware message passing (in/out/self transforms,
// mean combine), a linear classifier head, and full-batch training with
// hand-derived gradients.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cgnn/commute.hpp"
#include "cgnn/graph.hpp"

namespace cgnn {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LabelVector = std::vector<int>;

struct SplitAssignment {
  std::vector<NodeId> train, val, test;
};

enum class Activation { relu, none };

const char* to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Row-vector convention: a layer maps an N x d_in matrix to N x d_out, so
/// every weight matrix is d_in x d_out. The bias belongs to the self path.
struct LayerParams {
  Eigen::MatrixXd w_self, w_in, w_out;
  Eigen::RowVectorXd bias;

  Eigen::Index in_dim() const { return w_self.rows(); }
  Eigen::Index out_dim() const { return w_self.cols(); }
};

struct ModelParams {
  std::vector<LayerParams> layers;
  Eigen::MatrixXd head_w;  // d_L x K
  Eigen::RowVectorXd head_b;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static ModelParams init(Eigen::Index input_dim, Eigen::Index hidden, std::size_t num_layers,
                          Eigen::Index num_classes, std::uint64_t seed,
                          Activation activation = Activation::relu);

  Eigen::Index input_dim() const;
  Eigen::Index num_classes() const { return head_w.cols(); }
  void validate() const;

  /// Visits every parameter block in a fixed order with a stable name.
  template <typename F>
  void for_each_block(F&& f) { visit_blocks(*this, f); }
  template <typename F>
  void for_each_block(F&& f) const { visit_blocks(*this, f); }

  friend bool operator==(const ModelParams& a, const ModelParams& b);

 private:
  template <typename Self, typename F>
  static void visit_blocks(Self& self, F& f) {
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      const auto p = "layer" + std::to_string(l) + ".";
      f(p + "w_self", self.layers[l].w_self);
      f(p + "w_in", self.layers[l].w_in);
      f(p + "w_out", self.layers[l].w_out);
      f(p + "bias", self.layers[l].bias);
    }
    f(std::string("head.w"), self.head_w);
    f(std::string("head.b"), self.head_b);
  }
};

struct TrainConfig {
  std::size_t layers = 2;
  Eigen::Index hidden = 32;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  std::size_t rank_q = 5;
  CommuteBackend backend = CommuteBackend::dilap;
  Activation activation = Activation::relu;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

/// One commute-weighted layer (pre-activation). In/out messages are weighted
/// means over neighbors; the combine step averages the self term with each
/// nonempty message.
Eigen::MatrixXd cgnn_layer(const Eigen::MatrixXd& h_prev, const DiGraph& g,
                           const ProximityWeights& w, const LayerParams& params);

/// Unweighted direction-aware layer: plain neighbor means, same combine.
Eigen::MatrixXd dirgnn_layer(const Eigen::MatrixXd& h_prev, const DiGraph& g,
                             const LayerParams& params);

/// Logits (pre-softmax) of the full model. The activation is applied between
/// message-passing layers, not after the last one.
Eigen::MatrixXd forward(const ModelParams& params, const DiGraph& g, const Eigen::MatrixXd& x,
                        const ProximityWeights& w);
Eigen::MatrixXd dirgnn_forward(const ModelParams& params, const DiGraph& g,
                               const Eigen::MatrixXd& x);

/// Mean softmax cross-entropy over `nodes`.
double cross_entropy(const Eigen::MatrixXd& logits, const LabelVector& labels,
                     std::span<const NodeId> nodes);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;  // same shapes as the parameters
};

LossAndGradient loss_and_gradient(const ModelParams& params, const DiGraph& g,
                                  const Eigen::MatrixXd& x, const ProximityWeights& w,
                                  const LabelVector& labels, std::span<const NodeId> nodes);

/// Argmax per row, lowest class index on ties.
std::vector<int> predict(const Eigen::MatrixXd& logits);

double accuracy(const Eigen::MatrixXd& logits, const LabelVector& labels,
                std::span<const NodeId> nodes);

TrainResult train(const DiGraph& g, const Eigen::MatrixXd& x, const LabelVector& labels,
                  const SplitAssignment& splits, const ProximityWeights& w,
                  const TrainConfig& cfg);

double evaluate(const ModelParams& params, const DiGraph& g, const Eigen::MatrixXd& x,
                const LabelVector& labels, std::span<const NodeId> split,
                const ProximityWeights& w);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t parameters_checked = 0;
};

/// Central finite differences against loss_and_gradient over every parameter.
GradientCheckResult gradient_check(const ModelParams& params, const DiGraph& g,
                                   const Eigen::MatrixXd& x, const ProximityWeights& w,
                                   const LabelVector& labels, std::span<const NodeId> nodes,
                                   double step = 1e-5);

}  // namespace cgnn
