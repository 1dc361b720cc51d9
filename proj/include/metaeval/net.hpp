#pragma once

// Minimal feed-forward inference engine (dense + relu stacks) with analytic
// input gradients, flat parameter access and a small SGD trainer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "metaeval/dataset.hpp"
#include "metaeval/error.hpp"
#include "metaeval/rng.hpp"
#include "metaeval/tensor.hpp"

namespace metaeval {

enum class LayerKind { kDense, kRelu };

struct Layer {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major (dense only)
  std::vector<double> bias;     // out (dense only)

  static Layer dense(std::size_t in, std::size_t out) {
    return {LayerKind::kDense, in, out, std::vector<double>(in * out, 0.0),
            std::vector<double>(out, 0.0)};
  }
  static Layer dense(std::size_t in, std::size_t out, std::vector<double> w, std::vector<double> b) {
    return {LayerKind::kDense, in, out, std::move(w), std::move(b)};
  }
  static Layer relu(std::size_t dim) { return {LayerKind::kRelu, dim, dim, {}, {}}; }

  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  bool operator==(const Layer&) const = default;
};

struct Prediction {
  Vector logits;
  Vector probs;
  int label = 0;
};

/// Immutable after construction; every transformation returns a new Net.
class Net {
 public:
  Net() = default;

  explicit Net(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("Net: at least one layer required");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      if (l.in == 0 || l.out == 0) throw ShapeError("Net: layer " + std::to_string(i) + " has zero width");
      if (l.kind == LayerKind::kDense) {
        if (l.weights.size() != l.in * l.out || l.bias.size() != l.out) {
          throw ShapeError("Net: dense layer " + std::to_string(i) + " parameter shape mismatch");
        }
        for (double w : l.weights) {
          if (!std::isfinite(w)) throw ShapeError("Net: non-finite weight in layer " + std::to_string(i));
        }
        for (double b : l.bias) {
          if (!std::isfinite(b)) throw ShapeError("Net: non-finite bias in layer " + std::to_string(i));
        }
      } else {
        if (l.in != l.out || !l.weights.empty() || !l.bias.empty()) {
          throw ShapeError("Net: relu layer " + std::to_string(i) + " must be parameter-free");
        }
      }
      if (i > 0 && layers_[i - 1].out != l.in) {
        throw ShapeError("Net: layer " + std::to_string(i - 1) + " output " +
                         std::to_string(layers_[i - 1].out) + " does not feed layer " +
                         std::to_string(i) + " input " + std::to_string(l.in));
      }
    }
  }

  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t num_classes() const { return layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.parameter_count();
    return n;
  }

  std::vector<std::size_t> dense_layer_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].kind == LayerKind::kDense) idx.push_back(i);
    }
    return idx;
  }

  /// Copy with layer `index` replaced (shapes must match).
  Net with_layer(std::size_t index, Layer layer) const {
    std::vector<Layer> copy = layers_;
    copy.at(index) = std::move(layer);
    return Net(std::move(copy));
  }

  bool operator==(const Net&) const = default;

 private:
  std::vector<Layer> layers_;
};

namespace net_detail {

inline void apply_layer(const Layer& l, std::span<const double> in, Vector& out) {
  out.assign(l.out, 0.0);
  if (l.kind == LayerKind::kRelu) {
    for (std::size_t i = 0; i < l.out; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    return;
  }
  for (std::size_t r = 0; r < l.out; ++r) {
    const double* w = l.weights.data() + r * l.in;
    double acc = l.bias[r];
    for (std::size_t c = 0; c < l.in; ++c) acc += w[c] * in[c];
    out[r] = acc;
  }
}

// Activations of every layer boundary: acts[0] = x, acts[i + 1] = layer i output.
inline std::vector<Vector> forward_all(const Net& net, std::span<const double> x) {
  require_size(x, net.input_dim(), "forward");
  std::vector<Vector> acts;
  acts.reserve(net.layers().size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (const Layer& l : net.layers()) {
    Vector next;
    apply_layer(l, acts.back(), next);
    acts.push_back(std::move(next));
  }
  return acts;
}

// Backpropagates `grad_out` (gradient w.r.t. the final output) to the input.
// When `param_grad` is non-null, dense parameter gradients are accumulated there
// in get_weights() order.
inline Vector backward(const Net& net, const std::vector<Vector>& acts, Vector grad_out,
                       std::vector<double>* param_grad) {
  const auto& layers = net.layers();
  std::vector<std::size_t> offsets(layers.size(), 0);
  for (std::size_t i = 1; i < layers.size(); ++i) offsets[i] = offsets[i - 1] + layers[i - 1].parameter_count();
  Vector g = std::move(grad_out);
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& l = layers[li];
    const Vector& in = acts[li];
    Vector gin(l.in, 0.0);
    if (l.kind == LayerKind::kRelu) {
      // subgradient 0 at the kink
      for (std::size_t i = 0; i < l.in; ++i) gin[i] = in[i] > 0.0 ? g[i] : 0.0;
    } else {
      double* pw = param_grad ? param_grad->data() + offsets[li] : nullptr;
      for (std::size_t r = 0; r < l.out; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* w = l.weights.data() + r * l.in;
        for (std::size_t c = 0; c < l.in; ++c) gin[c] += w[c] * gr;
        if (pw) {
          for (std::size_t c = 0; c < l.in; ++c) pw[r * l.in + c] += gr * in[c];
          pw[l.weights.size() + r] += gr;
        }
      }
    }
    g = std::move(gin);
  }
  return g;
}

}  // namespace net_detail

/// Numerically stable softmax.
inline Vector softmax(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

/// First index of the maximum (lowest index wins ties).
inline int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline Vector logits(const Net& net, std::span<const double> x) {
  require_size(x, net.input_dim(), "forward");
  Vector cur(x.begin(), x.end());
  Vector next;
  for (const Layer& l : net.layers()) {
    net_detail::apply_layer(l, cur, next);
    std::swap(cur, next);
  }
  return cur;
}

inline Prediction forward(const Net& net, std::span<const double> x) {
  Prediction p;
  p.logits = logits(net, x);
  p.probs = softmax(p.logits);
  p.label = argmax(p.logits);
  return p;
}

inline int predict_label(const Net& net, std::span<const double> x) { return argmax(logits(net, x)); }

/// d logit[class_index] / dx, by the chain rule through the dense/relu stack.
inline Vector input_gradient(const Net& net, std::span<const double> x, int class_index) {
  if (class_index < 0 || static_cast<std::size_t>(class_index) >= net.num_classes()) {
    throw IndexError("input_gradient: class " + std::to_string(class_index) + " outside [0, " +
                     std::to_string(net.num_classes()) + ")");
  }
  const auto acts = net_detail::forward_all(net, x);
  Vector g(net.num_classes(), 0.0);
  g[static_cast<std::size_t>(class_index)] = 1.0;
  return net_detail::backward(net, acts, std::move(g), nullptr);
}

/// All dense parameters, layer by layer: weights (row-major) then bias.
inline Vector get_weights(const Net& net) {
  Vector w;
  w.reserve(net.parameter_count());
  for (const Layer& l : net.layers()) {
    w.insert(w.end(), l.weights.begin(), l.weights.end());
    w.insert(w.end(), l.bias.begin(), l.bias.end());
  }
  return w;
}

inline Net set_weights(const Net& net, std::span<const double> w) {
  require_size(w, net.parameter_count(), "set_weights");
  std::vector<Layer> layers = net.layers();
  std::size_t pos = 0;
  for (Layer& l : layers) {
    std::copy_n(w.begin() + static_cast<std::ptrdiff_t>(pos), l.weights.size(), l.weights.begin());
    pos += l.weights.size();
    std::copy_n(w.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
  return Net(std::move(layers));
}

/// Dense widths of an MLP: input -> hidden... -> classes, relu between dense layers.
struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t num_classes = 0;
};

/// Weights and biases uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
inline Net init_net(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.num_classes == 0) throw ShapeError("init_net: zero-sized architecture");
  Rng rng(derive_seed(seed, StreamTag::kInit));
  std::vector<Layer> layers;
  std::size_t in = arch.input_dim;
  auto add_dense = [&](std::size_t out) {
    Layer l = Layer::dense(in, out);
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    for (double& w : l.weights) w = rng.uniform(-bound, bound);
    for (double& b : l.bias) b = rng.uniform(-bound, bound);
    layers.push_back(std::move(l));
    in = out;
  };
  for (std::size_t h : arch.hidden) {
    add_dense(h);
    layers.push_back(Layer::relu(h));
  }
  add_dense(arch.num_classes);
  return Net(std::move(layers));
}

struct TrainOptions {
  int epochs = 20;
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::size_t batch_size = 1;

  bool operator==(const TrainOptions&) const = default;
};

/// Mini-batch SGD with momentum on softmax cross-entropy. Deterministic for a
/// fixed seed (initialisation and per-epoch shuffles derive from it).
inline Net train_tiny(const Architecture& arch, const Dataset& data, const TrainOptions& opts,
                      std::uint64_t seed) {
  if (data.size() == 0) throw ConfigError("train_tiny: empty dataset");
  if (data.dim() != arch.input_dim) throw ShapeError("train_tiny: dataset dimension does not match architecture");
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= arch.num_classes) {
      throw IndexError("train_tiny: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(arch.num_classes) + ")");
    }
  }
  if (opts.batch_size == 0) throw ConfigError("train_tiny: batch_size must be >= 1");
  Net net = init_net(arch, seed);
  if (opts.epochs <= 0) return net;

  Vector params = get_weights(net);
  Vector velocity(params.size(), 0.0);
  Vector grad(params.size(), 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng rng(derive_seed(seed, StreamTag::kShuffle, {static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto acts = net_detail::forward_all(net, data.inputs.row(i));
        for (double z : acts.back()) {
          if (!std::isfinite(z)) {
            throw TrainingDivergedError("train_tiny: non-finite logit in epoch " + std::to_string(epoch));
          }
        }
        Vector p = softmax(acts.back());
        const auto y = static_cast<std::size_t>(data.labels[i]);
        loss -= std::log(std::max(p[y], 1e-300));
        p[y] -= 1.0;
        net_detail::backward(net, acts, std::move(p), &grad);
      }
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError("train_tiny: non-finite loss in epoch " + std::to_string(epoch));
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = opts.momentum * velocity[k] + grad[k] * scale;
        params[k] -= opts.learning_rate * velocity[k];
        if (!std::isfinite(params[k])) {
          throw TrainingDivergedError("train_tiny: non-finite parameter in epoch " + std::to_string(epoch));
        }
      }
      net = set_weights(net, params);
    }
  }
  return net;
}

inline double accuracy(const Net& net, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict_label(net, data.inputs.row(i)) == data.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace metaeval
