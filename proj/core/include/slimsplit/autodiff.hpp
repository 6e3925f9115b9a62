// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "slimsplit/tensor.hpp"

namespace slimsplit {

// Trainable tensor. Values are always held in 64-bit; graphs running in
// 32-bit read a cast copy of the active slice.
struct Parameter {
  std::string name;
  Tensor64 value;
  Tensor64 grad;
  Tensor64 velocity;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string name_, Shape shape)
      : name(std::move(name_)), value(shape), grad(shape), velocity(shape) {}

  void zero_grad() { grad.fill(0.0); }
};

// Affine batch normalization with running statistics. gamma/beta and the
// statistics are sliced by channel prefix when the input is slimmed.
struct BatchNormState {
  Parameter gamma;
  Parameter beta;
  Tensor64 running_mean;
  Tensor64 running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  BatchNormState(const std::string& name, std::size_t channels);
  std::size_t channels() const { return gamma.value.size(); }
};

enum class Activation : std::uint8_t { none, relu, sigmoid };

// Active channel counts of a convolution; always a prefix of the weights.
struct ChannelSlice {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
};

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Output spatial extent of a direct convolution.
inline std::size_t conv_out_extent(std::size_t in, std::size_t k,
                                   std::size_t stride, std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Handle to a node on a Graph tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

// Reverse-mode tape over BasicTensor<T>.
//
// Every op appends one node. When `record` is set, each node also stores a
// closure that propagates its gradient to its inputs and to any Parameter it
// read; backward() replays these in reverse creation order, so gradients are
// bitwise reproducible for identical forward graphs. A graph can be
// backpropagated once.
template <class T>
class Graph {
 public:
  struct Options {
    bool record = true;   // keep the tape for backward()
    bool checked = true;  // raise NumericError on non-finite op outputs
  };

  Graph() : Graph(Options{}) {}
  explicit Graph(Options opts) : opts_(opts) {}

  static constexpr Precision precision = precision_of<T>::value;

  Var input(BasicTensor<T> value, bool requires_grad = false);

  const BasicTensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the last backward() w.r.t. v; empty if v did not need one.
  const BasicTensor<T>& grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return opts_.record; }

  // Direct convolution reading only weight[0:c_out, 0:c_in] of a parameter
  // shaped (c_out_max, c_in_max, k, k). x must carry exactly c_in channels.
  // `label` keys the MAC tally.
  Var conv2d(Var x, Parameter& weight, Parameter& bias, ChannelSlice slice,
             ConvGeometry geom, std::string_view label = "conv");
  // Full-width convenience form.
  Var conv2d(Var x, Parameter& weight, Parameter& bias, ConvGeometry geom,
             std::string_view label = "conv");

  // Training mode normalizes with batch statistics and updates the running
  // statistics of the active prefix; inference mode uses running statistics.
  Var batch_norm(Var x, BatchNormState& bn, bool training);

  Var relu(Var x);
  Var sigmoid(Var x);
  Var activate(Var x, Activation kind);
  Var upsample2x(Var x);

  Var add(Var a, Var b);
  Var scale(Var a, double factor);

  // Scalar losses, stored as a (1,1,1,1) tensor.
  Var mse(Var a, Var b);
  Var bce_with_logits(Var logits, Var targets);

  void backward(Var loss);

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool needs_grad = false;
    std::function<void(Graph&)> back;
  };

  Var push(BasicTensor<T> value, bool needs_grad, std::string_view op);
  BasicTensor<T>& grad_buffer(std::size_t id);
  bool needs(Var v) const { return nodes_.at(v.id).needs_grad; }

  Options opts_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace slimsplit
