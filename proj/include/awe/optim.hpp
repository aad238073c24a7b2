#pragma once

#include "awe/net.hpp"

namespace awe {

// ADADELTA (Zeiler's Algorithm 1). rho decays the running averages of
// squared gradients and squared updates; epsilon conditions both roots.
struct AdadeltaConfig {
  double rho = 0.9;
  double epsilon = 1e-6;
};

struct AdadeltaState {
  GradBlocks sq_grad;   // E[g^2]
  GradBlocks sq_delta;  // E[dx^2]
};

AdadeltaState make_adadelta_state(const NetworkParams& params);

// Per coordinate:
//   E[g^2]  <- rho E[g^2]  + (1 - rho) g^2
//   dx       = -(sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps)) g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       <- x + dx
// Rejects non-finite gradients before touching params or state.
void adadelta_step(NetworkParams& params, const GradBlocks& grads, AdadeltaState& state,
                   const AdadeltaConfig& config);

}  // namespace awe
