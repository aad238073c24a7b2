#include "awe/optim.hpp"

#include <stdexcept>

namespace awe {

namespace {

void step_array(double* x, const double* g, double* eg2, double* edx2, Index n,
                const AdadeltaConfig& c) {
  for (Index i = 0; i < n; ++i) {
    eg2[i] = c.rho * eg2[i] + (1.0 - c.rho) * g[i] * g[i];
    const double dx = -(std::sqrt(edx2[i] + c.epsilon) / std::sqrt(eg2[i] + c.epsilon)) * g[i];
    edx2[i] = c.rho * edx2[i] + (1.0 - c.rho) * dx * dx;
    x[i] += dx;
  }
}

}  // namespace

AdadeltaState make_adadelta_state(const NetworkParams& params) {
  return {zero_grad_blocks(params), zero_grad_blocks(params)};
}

void adadelta_step(NetworkParams& params, const GradBlocks& grads, AdadeltaState& state,
                   const AdadeltaConfig& config) {
  if (config.rho <= 0.0 || config.rho >= 1.0)
    throw std::invalid_argument("adadelta: rho must lie in (0, 1)");
  if (config.epsilon <= 0.0) throw std::invalid_argument("adadelta: epsilon must be positive");
  if (grads.size() != params.size() || state.sq_grad.size() != params.size())
    throw std::invalid_argument("adadelta: block count mismatch");

  for (std::size_t i = 0; i < params.size(); ++i) {
    const LayerParams& g = grads[i];
    LayerParams& p = params.blocks[i];
    if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
        g.bias.size() != p.bias.size())
      throw std::invalid_argument("adadelta: gradient shape mismatch at block " +
                                  std::to_string(i));
    if (!g.weight.allFinite() || !g.bias.allFinite())
      throw std::runtime_error("adadelta: non-finite gradient at block " + std::to_string(i) +
                               ", update aborted");
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    LayerParams& p = params.blocks[i];
    const LayerParams& g = grads[i];
    step_array(p.weight.data(), g.weight.data(), state.sq_grad[i].weight.data(),
               state.sq_delta[i].weight.data(), p.weight.size(), config);
    step_array(p.bias.data(), g.bias.data(), state.sq_grad[i].bias.data(),
               state.sq_delta[i].bias.data(), p.bias.size(), config);
  }
}

}  // namespace awe
