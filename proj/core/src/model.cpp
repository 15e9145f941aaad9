#include "cgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace cgnn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::none: return "none";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "none") return Activation::none;
  throw ModelError("unknown activation '" + std::string(name) + "' (expected relu or none)");
}

ModelParams ModelParams::init(Eigen::Index input_dim, Eigen::Index hidden, std::size_t num_layers,
                              Eigen::Index num_classes, std::uint64_t seed,
                              Activation activation) {
  if (input_dim < 1 || hidden < 1 || num_layers < 1 || num_classes < 1) {
    throw ModelError("ModelParams::init: dimensions and layer count must be positive");
  }
  std::mt19937_64 rng(seed);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    }
    return m;
  };

  ModelParams p;
  p.activation = activation;
  p.seed = seed;
  Eigen::Index in = input_dim;
  for (std::size_t l = 0; l < num_layers; ++l) {
    LayerParams layer;
    layer.w_self = draw(in, hidden);
    layer.w_in = draw(in, hidden);
    layer.w_out = draw(in, hidden);
    layer.bias = Eigen::RowVectorXd::Zero(hidden);
    p.layers.push_back(std::move(layer));
    in = hidden;
  }
  p.head_w = draw(hidden, num_classes);
  p.head_b = Eigen::RowVectorXd::Zero(num_classes);
  return p;
}

Eigen::Index ModelParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

void ModelParams::validate() const {
  if (layers.empty()) throw ModelError("model has no message-passing layers");
  Eigen::Index in = layers.front().in_dim();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto out = layer.out_dim();
    auto bad = [&](const Eigen::MatrixXd& m) { return m.rows() != in || m.cols() != out; };
    if (bad(layer.w_self) || bad(layer.w_in) || bad(layer.w_out) || layer.bias.size() != out) {
      throw ModelError("layer " + std::to_string(l) + " has inconsistent dimensions");
    }
    in = out;
  }
  if (head_w.rows() != in || head_b.size() != head_w.cols()) {
    throw ModelError("classifier head has inconsistent dimensions");
  }
  bool finite = true;
  for_each_block([&](const std::string&, const auto& block) { finite = finite && block.allFinite(); });
  if (!finite) throw ModelError("model parameters contain non-finite values");
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.activation != b.activation || a.seed != b.seed || a.layers.size() != b.layers.size()) {
    return false;
  }
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& la = a.layers[l];
    const auto& lb = b.layers[l];
    if (!same(la.w_self, lb.w_self) || !same(la.w_in, lb.w_in) || !same(la.w_out, lb.w_out) ||
        !same(la.bias, lb.bias)) {
      return false;
    }
  }
  return same(a.head_w, b.head_w) && same(a.head_b, b.head_b);
}

void TrainConfig::validate() const {
  if (layers < 1) throw ModelError("train config: layers must be >= 1");
  if (epochs < 1) throw ModelError("train config: epochs must be >= 1");
  if (hidden < 1) throw ModelError("train config: hidden must be >= 1");
  if (!(learning_rate >= 0.0)) throw ModelError("train config: learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ModelError("train config: weight decay must be >= 0");
  if (rank_q < 1) throw ModelError("train config: rank q must be >= 1");
}

namespace {

void check_inputs(const Eigen::MatrixXd& h, const DiGraph& g, const ProximityWeights* w,
                  const LayerParams& params) {
  if (static_cast<std::size_t>(h.rows()) != g.num_nodes()) {
    throw ModelError("layer input has " + std::to_string(h.rows()) + " rows for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  if (h.cols() != params.in_dim()) {
    throw ModelError("layer input width " + std::to_string(h.cols()) + " != weight rows " +
                     std::to_string(params.in_dim()));
  }
  if (w && (w->in_weight.size() != g.num_edges() || w->out_weight.size() != g.num_edges())) {
    throw ModelError("proximity weights do not match the graph's edge set");
  }
}

/// Dense row-vector neighbor aggregation. `weights` null means unit weights.
struct Aggregates {
  Eigen::MatrixXd in, out;
  std::vector<double> count;  // 1 + nonempty in + nonempty out, per node
};

Aggregates aggregate(const Eigen::MatrixXd& h, const DiGraph& g, const ProximityWeights* w) {
  const auto n = h.rows();
  Aggregates a{Eigen::MatrixXd::Zero(n, h.cols()), Eigen::MatrixXd::Zero(n, h.cols()),
               std::vector<double>(static_cast<std::size_t>(n), 1.0)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ins = g.in_edges(i);
    if (!ins.empty()) {
      for (auto k : ins) {
        const auto j = g.edge(k).src;
        if (w) {
          a.in.row(i) += w->in_weight[k] * h.row(j);
        } else {
          a.in.row(i) += h.row(j);
        }
      }
      a.in.row(i) /= static_cast<double>(ins.size());
      a.count[static_cast<std::size_t>(i)] += 1.0;
    }
    const auto outs = g.out_edges(i);
    if (!outs.empty()) {
      for (auto k : outs) {
        const auto j = g.edge(k).dst;
        if (w) {
          a.out.row(i) += w->out_weight[k] * h.row(j);
        } else {
          a.out.row(i) += h.row(j);
        }
      }
      a.out.row(i) /= static_cast<double>(outs.size());
      a.count[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  return a;
}

Eigen::MatrixXd combine(const Eigen::MatrixXd& h, const Aggregates& a, const LayerParams& p) {
  Eigen::MatrixXd z = h * p.w_self;
  z.rowwise() += p.bias;
  z += a.in * p.w_in;
  z += a.out * p.w_out;
  for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i) /= a.count[static_cast<std::size_t>(i)];
  return z;
}

void activate(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::relu) z = z.cwiseMax(0.0);
}

struct LayerCache {
  Eigen::MatrixXd input;
  Aggregates agg;
  Eigen::MatrixXd pre;  // combined, before activation
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Eigen::MatrixXd last_hidden;
  Eigen::MatrixXd logits;
};

ForwardCache forward_cached(const ModelParams& params, const DiGraph& g, const Eigen::MatrixXd& x,
                            const ProximityWeights* w) {
  params.validate();
  ForwardCache cache;
  Eigen::MatrixXd h = x;
  const auto num_layers = params.layers.size();
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto& layer = params.layers[l];
    check_inputs(h, g, w, layer);
    LayerCache lc;
    lc.agg = aggregate(h, g, w);
    lc.pre = combine(h, lc.agg, layer);
    lc.input = std::move(h);
    h = lc.pre;
    if (l + 1 < num_layers) activate(h, params.activation);
    cache.layers.push_back(std::move(lc));
  }
  cache.logits = h * params.head_w;
  cache.logits.rowwise() += params.head_b;
  cache.last_hidden = std::move(h);
  return cache;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

void check_labels(const Eigen::MatrixXd& logits, const LabelVector& labels,
                  std::span<const NodeId> nodes) {
  if (nodes.empty()) throw ModelError("node split is empty");
  if (labels.size() != static_cast<std::size_t>(logits.rows())) {
    throw ModelError("label vector length does not match node count");
  }
  for (auto v : nodes) {
    if (v < 0 || v >= logits.rows()) throw ModelError("split node id out of range");
    const int y = labels[static_cast<std::size_t>(v)];
    if (y < 0 || y >= logits.cols()) {
      throw ModelError("label " + std::to_string(y) + " of node " + std::to_string(v) +
                       " is outside [0, " + std::to_string(logits.cols()) + ")");
    }
  }
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.for_each_block([](const std::string&, auto& block) { block.setZero(); });
  return z;
}

}  // namespace

Eigen::MatrixXd cgnn_layer(const Eigen::MatrixXd& h_prev, const DiGraph& g,
                           const ProximityWeights& w, const LayerParams& params) {
  check_inputs(h_prev, g, &w, params);
  return combine(h_prev, aggregate(h_prev, g, &w), params);
}

Eigen::MatrixXd dirgnn_layer(const Eigen::MatrixXd& h_prev, const DiGraph& g,
                             const LayerParams& params) {
  check_inputs(h_prev, g, nullptr, params);
  return combine(h_prev, aggregate(h_prev, g, nullptr), params);
}

Eigen::MatrixXd forward(const ModelParams& params, const DiGraph& g, const Eigen::MatrixXd& x,
                        const ProximityWeights& w) {
  return forward_cached(params, g, x, &w).logits;
}

Eigen::MatrixXd dirgnn_forward(const ModelParams& params, const DiGraph& g,
                               const Eigen::MatrixXd& x) {
  return forward_cached(params, g, x, nullptr).logits;
}

double cross_entropy(const Eigen::MatrixXd& logits, const LabelVector& labels,
                     std::span<const NodeId> nodes) {
  check_labels(logits, labels, nodes);
  double total = 0.0;
  for (auto v : nodes) {
    const auto row = logits.row(v);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row(labels[static_cast<std::size_t>(v)]);
  }
  return total / static_cast<double>(nodes.size());
}

LossAndGradient loss_and_gradient(const ModelParams& params, const DiGraph& g,
                                  const Eigen::MatrixXd& x, const ProximityWeights& w,
                                  const LabelVector& labels, std::span<const NodeId> nodes) {
  const ForwardCache cache = forward_cached(params, g, x, &w);
  LossAndGradient out;
  out.loss = cross_entropy(cache.logits, labels, nodes);
  out.gradient = zeros_like(params);
  auto& grad = out.gradient;

  const Eigen::MatrixXd probs = softmax_rows(cache.logits);
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(cache.logits.rows(), cache.logits.cols());
  const double scale = 1.0 / static_cast<double>(nodes.size());
  for (auto v : nodes) {
    d_logits.row(v) += scale * probs.row(v);
    d_logits(v, labels[static_cast<std::size_t>(v)]) -= scale;
  }

  grad.head_w = cache.last_hidden.transpose() * d_logits;
  grad.head_b = d_logits.colwise().sum();
  Eigen::MatrixXd d_h = d_logits * params.head_w.transpose();

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& p = params.layers[l];
    const auto& lc = cache.layers[l];
    auto& gl = grad.layers[l];

    Eigen::MatrixXd d_pre = d_h;
    if (params.activation == Activation::relu && l + 1 < params.layers.size()) {
      d_pre = (lc.pre.array() > 0.0).select(d_pre, 0.0);
    }
    // Undo the per-node combine mean.
    for (Eigen::Index i = 0; i < d_pre.rows(); ++i) {
      d_pre.row(i) /= lc.agg.count[static_cast<std::size_t>(i)];
    }

    gl.w_self = lc.input.transpose() * d_pre;
    gl.w_in = lc.agg.in.transpose() * d_pre;
    gl.w_out = lc.agg.out.transpose() * d_pre;
    gl.bias = d_pre.colwise().sum();

    if (l == 0) break;  // input features carry no parameters
    Eigen::MatrixXd d_input = d_pre * p.w_self.transpose();
    const Eigen::MatrixXd d_in_agg = d_pre * p.w_in.transpose();
    const Eigen::MatrixXd d_out_agg = d_pre * p.w_out.transpose();
    for (Eigen::Index i = 0; i < d_input.rows(); ++i) {
      const auto ins = g.in_edges(i);
      for (auto k : ins) {
        d_input.row(g.edge(k).src) +=
            (w.in_weight[k] / static_cast<double>(ins.size())) * d_in_agg.row(i);
      }
      const auto outs = g.out_edges(i);
      for (auto k : outs) {
        d_input.row(g.edge(k).dst) +=
            (w.out_weight[k] / static_cast<double>(outs.size())) * d_out_agg.row(i);
      }
    }
    d_h = std::move(d_input);
  }
  return out;
}

std::vector<int> predict(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const Eigen::MatrixXd& logits, const LabelVector& labels,
                std::span<const NodeId> nodes) {
  check_labels(logits, labels, nodes);
  const auto pred = predict(logits);
  std::size_t hits = 0;
  for (auto v : nodes) {
    hits += pred[static_cast<std::size_t>(v)] == labels[static_cast<std::size_t>(v)];
  }
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

TrainResult train(const DiGraph& g, const Eigen::MatrixXd& x, const LabelVector& labels,
                  const SplitAssignment& splits, const ProximityWeights& w,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (splits.train.empty()) throw ModelError("training split is empty");
  if (labels.size() != g.num_nodes()) throw ModelError("label vector length does not match graph");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  const Eigen::Index classes = std::max(2, max_label + 1);

  TrainResult result;
  result.params = ModelParams::init(x.cols(), cfg.hidden, cfg.layers, classes, cfg.seed,
                                    cfg.activation);
  auto& params = result.params;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto lg = loss_and_gradient(params, g, x, w, labels, splits.train);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = lg.loss;
    const Eigen::MatrixXd logits = forward(params, g, x, w);
    rec.train_accuracy = accuracy(logits, labels, splits.train);
    rec.val_accuracy = splits.val.empty() ? 0.0 : accuracy(logits, labels, splits.val);
    result.history.push_back(rec);

    const double lr = cfg.learning_rate;
    const double decay = 1.0 - lr * cfg.weight_decay;
    auto step_weight = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& d) {
      p = decay * p - lr * d;
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      auto& p = params.layers[l];
      const auto& d = lg.gradient.layers[l];
      step_weight(p.w_self, d.w_self);
      step_weight(p.w_in, d.w_in);
      step_weight(p.w_out, d.w_out);
      p.bias -= lr * d.bias;
    }
    step_weight(params.head_w, lg.gradient.head_w);
    params.head_b -= lr * lg.gradient.head_b;
  }
  return result;
}

double evaluate(const ModelParams& params, const DiGraph& g, const Eigen::MatrixXd& x,
                const LabelVector& labels, std::span<const NodeId> split,
                const ProximityWeights& w) {
  if (split.empty()) throw ModelError("evaluation split is empty");
  return accuracy(forward(params, g, x, w), labels, split);
}

GradientCheckResult gradient_check(const ModelParams& params, const DiGraph& g,
                                   const Eigen::MatrixXd& x, const ProximityWeights& w,
                                   const LabelVector& labels, std::span<const NodeId> nodes,
                                   double step) {
  constexpr double kFloor = 1e-6;
  const auto analytic = loss_and_gradient(params, g, x, w, labels, nodes).gradient;

  ModelParams probe = params;
  std::vector<Eigen::Map<Eigen::VectorXd>> probe_blocks;
  std::vector<Eigen::Map<const Eigen::VectorXd>> grad_blocks;
  probe.for_each_block([&](const std::string&, auto& block) {
    probe_blocks.emplace_back(block.data(), block.size());
  });
  analytic.for_each_block([&](const std::string&, const auto& block) {
    grad_blocks.emplace_back(block.data(), block.size());
  });

  GradientCheckResult res;
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    auto& block = probe_blocks[b];
    for (Eigen::Index k = 0; k < block.size(); ++k) {
      const double saved = block(k);
      block(k) = saved + step;
      const double up = cross_entropy(forward(probe, g, x, w), labels, nodes);
      block(k) = saved - step;
      const double down = cross_entropy(forward(probe, g, x, w), labels, nodes);
      block(k) = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad_blocks[b](k);
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), kFloor});
      res.max_absolute_error = std::max(res.max_absolute_error, abs_err);
      res.max_relative_error = std::max(res.max_relative_error, rel);
      ++res.parameters_checked;
    }
  }
  return res;
}

}  // namespace cgnn
