#include "awe/net.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace awe {

namespace {

[[noreturn]] void shape_error(std::size_t layer_index, const LayerSpec& spec,
                              const std::string& expected, Shape actual) {
  std::ostringstream os;
  os << "layer " << layer_index << " (" << layer_name(spec) << "): expected " << expected
     << ", got " << actual.rows << "x" << actual.cols;
  throw std::invalid_argument(os.str());
}

// Patch matrix for valid 1-D convolution over time: column t holds the
// input window [t, t + w) across all channels, channel-major.
Matrix im2col(const Matrix& input, int w) {
  const Index channels = input.rows();
  const Index out_w = input.cols() - w + 1;
  Matrix patches(channels * w, out_w);
  for (Index c = 0; c < channels; ++c)
    for (Index dt = 0; dt < w; ++dt)
      patches.row(c * w + dt) = input.row(c).segment(dt, out_w);
  return patches;
}

Matrix softmax_columns(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    const Vector col = z.col(j);
    Vector e = (col.array() - col.maxCoeff()).exp();
    out.col(j) = e / e.sum();
  }
  return out;
}

}  // namespace

LayerSpec LayerSpec::conv1d(int num_filters, int filter_width) {
  if (num_filters < 1 || filter_width < 1)
    throw std::invalid_argument("conv1d: num_filters and filter_width must be >= 1");
  LayerSpec s{LayerKind::Conv1D};
  s.num_filters = num_filters;
  s.filter_width = filter_width;
  return s;
}

LayerSpec LayerSpec::maxpool(int pool_width) {
  if (pool_width < 1) throw std::invalid_argument("maxpool: pool_width must be >= 1");
  LayerSpec s{LayerKind::MaxPool};
  s.pool_width = pool_width;
  return s;
}

LayerSpec LayerSpec::affine(int out_dim) {
  if (out_dim < 1) throw std::invalid_argument("affine: out_dim must be >= 1");
  LayerSpec s{LayerKind::Affine};
  s.out_dim = out_dim;
  return s;
}

std::string layer_name(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::Conv1D:
      return "conv1d(" + std::to_string(spec.num_filters) + "x" +
             std::to_string(spec.filter_width) + ")";
    case LayerKind::MaxPool:
      return "maxpool(" + std::to_string(spec.pool_width) + ")";
    case LayerKind::ReLU:
      return "relu";
    case LayerKind::Affine:
      return "affine(" + std::to_string(spec.out_dim) + ")";
    case LayerKind::Softmax:
      return "softmax";
  }
  return "?";
}

Shape layer_output_shape(const LayerSpec& spec, Shape in, std::size_t layer_index) {
  if (in.rows < 1 || in.cols < 1) shape_error(layer_index, spec, "a non-empty input", in);
  switch (spec.kind) {
    case LayerKind::Conv1D:
      if (in.cols < spec.filter_width)
        shape_error(layer_index, spec,
                    "input with >= " + std::to_string(spec.filter_width) + " columns", in);
      return {spec.num_filters, in.cols - spec.filter_width + 1};
    case LayerKind::MaxPool: {
      const Index out_w = in.cols / spec.pool_width;
      if (out_w < 1)
        shape_error(layer_index, spec,
                    "input with >= " + std::to_string(spec.pool_width) + " columns", in);
      return {in.rows, out_w};
    }
    case LayerKind::ReLU:
      return in;
    case LayerKind::Affine:
      return {spec.out_dim, 1};
    case LayerKind::Softmax:
      return in;
  }
  throw std::logic_error("unreachable layer kind");
}

Shape network_output_shape(const std::vector<LayerSpec>& layers, Shape in) {
  Shape s = in;
  for (std::size_t i = 0; i < layers.size(); ++i) s = layer_output_shape(layers[i], s, i);
  return s;
}

NetworkParams init_network(const std::vector<LayerSpec>& layers, Shape input_shape,
                           std::mt19937_64& rng) {
  NetworkParams params;
  params.layers = layers;
  params.blocks.resize(layers.size());
  Shape s = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    LayerParams& block = params.blocks[i];
    if (spec.kind == LayerKind::Conv1D) {
      const Index fan_in = s.rows * spec.filter_width;
      const Index fan_out = static_cast<Index>(spec.num_filters) * spec.filter_width;
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      block.weight.resize(spec.num_filters, fan_in);
      for (Index k = 0; k < block.weight.size(); ++k) block.weight.data()[k] = dist(rng);
      block.bias = Vector::Zero(spec.num_filters);
    } else if (spec.kind == LayerKind::Affine) {
      const Index fan_in = s.rows * s.cols;
      const Index fan_out = spec.out_dim;
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      block.weight.resize(spec.out_dim, fan_in);
      for (Index k = 0; k < block.weight.size(); ++k) block.weight.data()[k] = dist(rng);
      block.bias = Vector::Zero(spec.out_dim);
    }
    s = layer_output_shape(spec, s, i);
  }
  return params;
}

Matrix layer_forward(const LayerSpec& spec, const LayerParams& params, const Matrix& input) {
  switch (spec.kind) {
    case LayerKind::Conv1D: {
      layer_output_shape(spec, {input.rows(), input.cols()});
      const Matrix patches = im2col(input, spec.filter_width);
      Matrix out = params.weight * patches;
      out.colwise() += params.bias;
      return out;
    }
    case LayerKind::MaxPool: {
      const Shape os = layer_output_shape(spec, {input.rows(), input.cols()});
      const int p = spec.pool_width;
      Matrix out(os.rows, os.cols);
      for (Index c = 0; c < input.rows(); ++c)
        for (Index k = 0; k < os.cols; ++k) out(c, k) = input.row(c).segment(k * p, p).maxCoeff();
      return out;
    }
    case LayerKind::ReLU:
      return input.cwiseMax(0.0);
    case LayerKind::Affine: {
      const Vector x = flatten(input);
      if (x.size() != params.weight.cols()) {
        std::ostringstream os;
        os << "affine: weight expects input of size " << params.weight.cols() << ", got "
           << x.size();
        throw std::invalid_argument(os.str());
      }
      Matrix out(params.weight.rows(), 1);
      out.col(0) = params.weight * x + params.bias;
      return out;
    }
    case LayerKind::Softmax:
      return softmax_columns(input);
  }
  throw std::logic_error("unreachable layer kind");
}

ForwardTrace network_forward(const NetworkParams& params, const Matrix& input) {
  ForwardTrace trace;
  trace.activations.reserve(params.size() + 1);
  trace.activations.push_back(input);
  Shape s{input.rows(), input.cols()};
  for (std::size_t i = 0; i < params.size(); ++i) {
    s = layer_output_shape(params.layers[i], s, i);  // throws with layer index on mismatch
    trace.activations.push_back(
        layer_forward(params.layers[i], params.blocks[i], trace.activations.back()));
  }
  return trace;
}

std::pair<GradBlocks, Matrix> network_backward(const NetworkParams& params,
                                               const ForwardTrace& trace,
                                               const Matrix& output_grad) {
  if (trace.activations.size() != params.size() + 1)
    throw std::invalid_argument("network_backward: trace does not match network depth");
  if (output_grad.rows() != trace.output().rows() || output_grad.cols() != trace.output().cols())
    throw std::invalid_argument("network_backward: output gradient shape mismatch");

  GradBlocks grads = zero_grad_blocks(params);
  Matrix g = output_grad;
  for (std::size_t idx = params.size(); idx-- > 0;) {
    const LayerSpec& spec = params.layers[idx];
    const LayerParams& block = params.blocks[idx];
    const Matrix& in = trace.activations[idx];
    const Matrix& out = trace.activations[idx + 1];
    switch (spec.kind) {
      case LayerKind::Conv1D: {
        const int w = spec.filter_width;
        const Matrix patches = im2col(in, w);
        grads[idx].weight = g * patches.transpose();
        grads[idx].bias = g.rowwise().sum();
        const Matrix dpatches = block.weight.transpose() * g;
        Matrix din = Matrix::Zero(in.rows(), in.cols());
        for (Index c = 0; c < in.rows(); ++c)
          for (Index dt = 0; dt < w; ++dt)
            din.row(c).segment(dt, dpatches.cols()) += dpatches.row(c * w + dt);
        g = std::move(din);
        break;
      }
      case LayerKind::MaxPool: {
        const int p = spec.pool_width;
        Matrix din = Matrix::Zero(in.rows(), in.cols());
        for (Index c = 0; c < in.rows(); ++c)
          for (Index k = 0; k < out.cols(); ++k) {
            // first maximal position wins on ties
            Index arg = k * p;
            for (Index t = k * p + 1; t < (k + 1) * p; ++t)
              if (in(c, t) > in(c, arg)) arg = t;
            din(c, arg) += g(c, k);
          }
        g = std::move(din);
        break;
      }
      case LayerKind::ReLU:
        g = ((in.array() > 0.0).select(g.array(), 0.0)).matrix();
        break;
      case LayerKind::Affine: {
        const Vector x = flatten(in);
        const Vector gv = flatten(g);
        grads[idx].weight = gv * x.transpose();
        grads[idx].bias = gv;
        const Vector dx = block.weight.transpose() * gv;
        g = reshape(dx, in.rows(), in.cols());
        break;
      }
      case LayerKind::Softmax: {
        Matrix din(in.rows(), in.cols());
        for (Index j = 0; j < in.cols(); ++j) {
          const Vector s = out.col(j);
          const Vector gj = g.col(j);
          const double dot = s.dot(gj);
          din.col(j) = s.array() * (gj.array() - dot);
        }
        g = std::move(din);
        break;
      }
    }
  }
  return {std::move(grads), std::move(g)};
}

GradBlocks zero_grad_blocks(const NetworkParams& params) {
  GradBlocks grads(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const LayerParams& b = params.blocks[i];
    grads[i].weight = Matrix::Zero(b.weight.rows(), b.weight.cols());
    grads[i].bias = Vector::Zero(b.bias.size());
  }
  return grads;
}

void accumulate(GradBlocks& acc, const GradBlocks& g, double scale) {
  if (acc.size() != g.size()) throw std::invalid_argument("accumulate: block count mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i].weight += scale * g[i].weight;
    acc[i].bias += scale * g[i].bias;
  }
}

void scale_blocks(GradBlocks& g, double scale) {
  for (LayerParams& b : g) {
    b.weight *= scale;
    b.bias *= scale;
  }
}

double finite_difference_check(const NetworkParams& params, const LossFn& loss_fn, double h) {
  const LossWithGrads analytic = loss_fn(params);
  if (!std::isfinite(analytic.value))
    throw std::runtime_error("finite_difference_check: loss is not finite");

  NetworkParams probe = params;
  double max_err = 0.0;
  auto check_coord = [&](double* coord, double analytic_grad) {
    const double saved = *coord;
    *coord = saved + h;
    const double up = loss_fn(probe).value;
    *coord = saved - h;
    const double down = loss_fn(probe).value;
    *coord = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::runtime_error("finite_difference_check: perturbed loss is not finite");
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max(1e-12, std::abs(analytic_grad) + std::abs(numeric));
    max_err = std::max(max_err, std::abs(analytic_grad - numeric) / denom);
  };

  for (std::size_t i = 0; i < probe.size(); ++i) {
    LayerParams& b = probe.blocks[i];
    const LayerParams& g = analytic.grads[i];
    for (Index k = 0; k < b.weight.size(); ++k) check_coord(b.weight.data() + k, g.weight.data()[k]);
    for (Index k = 0; k < b.bias.size(); ++k) check_coord(b.bias.data() + k, g.bias[k]);
  }
  return max_err;
}

}  // namespace awe
