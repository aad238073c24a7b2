#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "awe/matrix.hpp"

namespace awe {

// Minimal feed-forward network core: 1-D convolution over time, max
// pooling, ReLU, affine and softmax layers, with exact backprop.
//
// Activations are channels x time matrices until the first affine layer
// flattens them (row-major, channel 0 first); from there on they are
// column vectors stored as d x 1 matrices.

enum class LayerKind { Conv1D, MaxPool, ReLU, Affine, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int num_filters = 0;   // Conv1D
  int filter_width = 0;  // Conv1D
  int pool_width = 0;    // MaxPool
  int out_dim = 0;       // Affine

  static LayerSpec conv1d(int num_filters, int filter_width);
  static LayerSpec maxpool(int pool_width);
  static LayerSpec relu() { return {LayerKind::ReLU}; }
  static LayerSpec affine(int out_dim);
  static LayerSpec softmax() { return {LayerKind::Softmax}; }

  bool operator==(const LayerSpec&) const = default;
};

std::string layer_name(const LayerSpec& spec);

// Conv1D: weight is num_filters x (in_channels * filter_width), one
// flattened filter per row (entry for channel c, offset t at column
// c * filter_width + t); bias has one entry per filter.
// Affine: weight is out_dim x in_dim, bias out_dim.
// ReLU / MaxPool / Softmax carry empty blocks.
struct LayerParams {
  Matrix weight;
  Vector bias;
};

struct NetworkParams {
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> blocks;

  std::size_t size() const { return layers.size(); }
};

// Parameter-shaped gradient (or accumulator) storage.
using GradBlocks = std::vector<LayerParams>;

struct ForwardTrace {
  // activations[0] is the input, activations[i + 1] the output of layer i.
  std::vector<Matrix> activations;

  const Matrix& output() const { return activations.back(); }
};

// Output shape of a single layer; throws a dimension error naming the
// layer when the input does not fit.
Shape layer_output_shape(const LayerSpec& spec, Shape in, std::size_t layer_index = 0);

// Shape of the network output for a given input shape (validates that
// all layers compose).
Shape network_output_shape(const std::vector<LayerSpec>& layers, Shape in);

Matrix layer_forward(const LayerSpec& spec, const LayerParams& params, const Matrix& input);

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero
// biases, drawn in layer order from the given engine.
NetworkParams init_network(const std::vector<LayerSpec>& layers, Shape input_shape,
                           std::mt19937_64& rng);

ForwardTrace network_forward(const NetworkParams& params, const Matrix& input);

// Gradients of a scalar loss w.r.t. every parameter block and the input,
// given the trace of the forward pass and d(loss)/d(output).
std::pair<GradBlocks, Matrix> network_backward(const NetworkParams& params,
                                               const ForwardTrace& trace,
                                               const Matrix& output_grad);

GradBlocks zero_grad_blocks(const NetworkParams& params);
void accumulate(GradBlocks& acc, const GradBlocks& g, double scale = 1.0);
void scale_blocks(GradBlocks& g, double scale);

// A loss together with its analytic parameter gradients, as produced by
// one or more backward passes over shared parameters.
struct LossWithGrads {
  double value = 0.0;
  GradBlocks grads;
};

using LossFn = std::function<LossWithGrads(const NetworkParams&)>;

// Max over all parameter coordinates of
//   |analytic - numeric| / max(1e-12, |analytic| + |numeric|)
// with the numeric derivative from central differences of step h.
double finite_difference_check(const NetworkParams& params, const LossFn& loss_fn,
                               double h = 1e-5);

}  // namespace awe
