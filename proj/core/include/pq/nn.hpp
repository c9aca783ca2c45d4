#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pq/signal.hpp"

namespace pq::nn {

/// Channel-major 1-D feature map: entry (c, j) lives at data[c * length + j].
/// Flattening is therefore the identity on storage.
struct Tensor1D {
  int channels = 0;
  int length = 0;
  std::vector<double> data;

  static Tensor1D zeros(int channels, int length) {
    Tensor1D t;
    t.channels = channels;
    t.length = length;
    t.data.assign(static_cast<std::size_t>(channels) * length, 0.0);
    return t;
  }

  static Tensor1D from_samples(std::span<const double> samples) {
    Tensor1D t;
    t.channels = 1;
    t.length = static_cast<int>(samples.size());
    t.data.assign(samples.begin(), samples.end());
    return t;
  }

  double& at(int c, int j) { return data[static_cast<std::size_t>(c) * length + j]; }
  double at(int c, int j) const { return data[static_cast<std::size_t>(c) * length + j]; }
  std::size_t size() const { return data.size(); }
};

/// Valid (no padding) cross-correlation with learned filters and shared
/// weights. Gradients accumulate into grad_kernels / grad_bias so a
/// mini-batch can sum contributions before averaging.
struct ConvLayer {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_len = 1;
  int stride = 1;
  std::vector<double> kernels;  // [out][in][m], contiguous
  std::vector<double> bias;     // [out]
  std::vector<double> grad_kernels;
  std::vector<double> grad_bias;

  int output_length(int in_len) const { return (in_len - kernel_len) / stride + 1; }

  double& kernel_at(int o, int c, int m) {
    return kernels[(static_cast<std::size_t>(o) * in_channels + c) * kernel_len + m];
  }

  /// out[o][j] = bias[o] + sum_c sum_m kernels[o][c][m] * x[c][j*stride + m].
  /// Per output element the additions happen in (c, m) lexicographic order,
  /// so the result is bit-identical to a naive accumulator loop.
  Tensor1D forward(const Tensor1D& x) const;

  /// Exact gradients of forward. Accumulates into grad_kernels/grad_bias and
  /// returns the gradient w.r.t. x. grad_out must match the forward output
  /// shape.
  Tensor1D backward(const Tensor1D& x, const Tensor1D& grad_out);

  void zero_grads();
};

/// Elementwise max(alpha*x, x). The derivative at exactly 0 is taken as 1.
Tensor1D leaky_relu_forward(const Tensor1D& x, double alpha);
Tensor1D leaky_relu_backward(const Tensor1D& x, const Tensor1D& grad_out, double alpha);

struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weights;  // row-major [out][in]
  std::vector<double> bias;     // [out]
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;

  std::vector<double> forward(std::span<const double> x) const;
  /// Accumulates into grad_weights/grad_bias, returns gradient w.r.t. x.
  std::vector<double> backward(std::span<const double> x, std::span<const double> grad_out);
  void zero_grads();
};

/// Numerically stable (max-shifted) softmax: positive entries, unit sum.
std::vector<double> softmax(std::span<const double> z);

/// Negative log likelihood of the correct class with the fused gradient
/// softmax(z) - onehot(label). Throws std::invalid_argument when label is
/// outside [0, z.size()).
struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
LossAndGrad cross_entropy_with_grad(std::span<const double> logits, int label);
double cross_entropy_loss(std::span<const double> logits, int label);

/// Fixed layer family: (conv -> leaky-ReLU)* -> flatten -> dense -> softmax.
/// The conv stack may be empty, in which case the dense layer sees the raw
/// flattened input.
struct Network {
  std::string arch_name = "custom";
  std::string structure;
  int input_length = 0;
  int class_count = kClassCount;
  double lrelu_alpha = 0.001;
  std::vector<ConvLayer> convs;
  DenseLayer dense;

  /// Feature count entering the dense layer. Throws if some conv layer
  /// cannot produce at least one output position.
  int flattened_size() const;

  std::size_t parameter_count() const;
  void zero_gradients();

  /// Fixed traversal order: per conv layer kernels then bias, then dense
  /// weights then bias. Optimizer state and checkpoints rely on this order.
  template <typename F>
  void for_each_param(F&& fn) {
    for (ConvLayer& layer : convs) {
      for (std::size_t i = 0; i < layer.kernels.size(); ++i) fn(layer.kernels[i], layer.grad_kernels[i]);
      for (std::size_t i = 0; i < layer.bias.size(); ++i) fn(layer.bias[i], layer.grad_bias[i]);
    }
    for (std::size_t i = 0; i < dense.weights.size(); ++i) fn(dense.weights[i], dense.grad_weights[i]);
    for (std::size_t i = 0; i < dense.bias.size(); ++i) fn(dense.bias[i], dense.grad_bias[i]);
  }

  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  std::vector<double> gradients() const;
};

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
  std::vector<Tensor1D> conv_in;   // input to conv layer i
  std::vector<Tensor1D> preact;    // conv layer i output before leaky-ReLU
  Tensor1D features;               // final activation (flatten source)
  std::vector<double> logits;
  std::vector<double> probs;
};

ForwardTrace network_forward_trace(const Network& net, const Tensor1D& x);

/// Class probabilities for one input.
std::vector<double> network_forward(const Network& net, const Tensor1D& x);

/// Accumulates dLoss/dParam for every parameter into the network's gradient
/// stores and returns the loss. Call zero_gradients() at mini-batch start.
double network_backward(Network& net, const ForwardTrace& trace, int label);

struct ConvSpecEntry {
  int kernel_len = 1;
  int filters = 1;
  int stride = 1;
};

/// Assemble and Glorot-initialize a network; deterministic in seed.
Network make_network(int input_len, std::span<const ConvSpecEntry> convs, int class_count,
                     std::uint64_t seed, double lrelu_alpha = 0.001);

/// Named architectures: cnn-1a (convs 200/100/50), cnn-1b (200/100),
/// cnn-1c (200), cnn-1d (400); 8 filters per conv, stride 4 on the first
/// layer and 2 on deeper ones, leaky-ReLU after each conv, dense(6) head.
/// Throws std::invalid_argument listing the valid names.
Network build_architecture(const std::string& name, int input_len, std::uint64_t seed);

std::vector<std::string> architecture_names();

/// Binary .pqnn model container; save -> load reproduces predictions
/// bit-exactly. Same atomic-write and error conventions as the dataset file.
void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

}  // namespace pq::nn
