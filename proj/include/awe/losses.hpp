#pragma once

#include "awe/matrix.hpp"

namespace awe {

enum class LossKind { CrossEntropy, CosCos2, CosHinge };

// Euclidean variants exist for comparison; cosine is the default
// everywhere.
enum class DistanceKind { Cosine, Euclidean };

struct LossConfig {
  LossKind kind = LossKind::CosHinge;
  double margin = 0.15;  // CosHinge only
  DistanceKind distance = DistanceKind::Cosine;
};

// (1 - cos(x1, x2)) / 2: 0 parallel, 0.5 orthogonal, 1 anti-parallel.
// Throws on vectors with norm below 1e-12.
double cosine_distance(const Vector& x1, const Vector& x2);

double euclidean_distance(const Vector& x1, const Vector& x2);

double pair_distance(const Vector& x1, const Vector& x2, DistanceKind kind);

// Same pair: (1 - cos)/2. Different pair: cos^2.
double coscos2_loss(const Vector& x1, const Vector& x2, bool same);

// max{0, margin + d(x1, x2) - d(x1, x3)} with x1/x2 of the same type and
// x1/x3 of different types.
double cos_hinge_loss(const Vector& x1, const Vector& x2, const Vector& x3, double margin,
                      DistanceKind distance = DistanceKind::Cosine);

// -ln predicted[target]; predicted must be a stochastic vector. Values
// below 1e-300 are clamped (with a warning on stderr) to keep the log finite.
double cross_entropy_loss(const Vector& predicted, Index target);

struct PairGrad {
  double value = 0.0;
  Vector grad1, grad2;
};

struct TripletGrad {
  double value = 0.0;
  Vector grad1, grad2, grad3;
};

PairGrad coscos2_loss_grad(const Vector& x1, const Vector& x2, bool same);

// Gradient is zero at and inside the hinge boundary.
TripletGrad cos_hinge_loss_grad(const Vector& x1, const Vector& x2, const Vector& x3,
                                double margin, DistanceKind distance = DistanceKind::Cosine);

// d(loss)/d(predicted) for backpropagation through a softmax output layer.
Vector cross_entropy_output_grad(const Vector& predicted, Index target);

// The fused identity: d(loss)/d(logits) = predicted - one_hot(target).
Vector cross_entropy_logit_grad(const Vector& predicted, Index target);

}  // namespace awe
