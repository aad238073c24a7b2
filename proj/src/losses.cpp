#include "awe/losses.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace awe {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr double kProbFloor = 1e-300;

double checked_norm(const Vector& x, const char* which) {
  const double n = x.norm();
  if (n < kNormFloor)
    throw std::invalid_argument(std::string("degenerate (near-zero) vector for ") + which);
  return n;
}

double cosine_similarity(const Vector& x1, const Vector& x2) {
  return x1.dot(x2) / (checked_norm(x1, "cosine") * checked_norm(x2, "cosine"));
}

// d cos(x, y) / dx = y / (|x||y|) - cos(x, y) x / |x|^2
Vector cosine_grad_wrt_first(const Vector& x, const Vector& y) {
  const double nx = checked_norm(x, "cosine");
  const double ny = checked_norm(y, "cosine");
  const double cos = x.dot(y) / (nx * ny);
  return y / (nx * ny) - (cos / (nx * nx)) * x;
}

}  // namespace

double cosine_distance(const Vector& x1, const Vector& x2) {
  return 0.5 * (1.0 - cosine_similarity(x1, x2));
}

double euclidean_distance(const Vector& x1, const Vector& x2) {
  if (x1.size() != x2.size())
    throw std::invalid_argument("euclidean_distance: dimension mismatch");
  return (x1 - x2).norm();
}

double pair_distance(const Vector& x1, const Vector& x2, DistanceKind kind) {
  return kind == DistanceKind::Cosine ? cosine_distance(x1, x2) : euclidean_distance(x1, x2);
}

double coscos2_loss(const Vector& x1, const Vector& x2, bool same) {
  const double cos = cosine_similarity(x1, x2);
  return same ? 0.5 * (1.0 - cos) : cos * cos;
}

double cos_hinge_loss(const Vector& x1, const Vector& x2, const Vector& x3, double margin,
                      DistanceKind distance) {
  const double d12 = pair_distance(x1, x2, distance);
  const double d13 = pair_distance(x1, x3, distance);
  return std::max(0.0, margin + d12 - d13);
}

double cross_entropy_loss(const Vector& predicted, Index target) {
  if (target < 0 || target >= predicted.size())
    throw std::invalid_argument("cross_entropy: target out of range");
  double p = predicted[target];
  if (p < kProbFloor) {
    std::cerr << "warning: cross_entropy clamped probability " << p << " at class " << target
              << "\n";
    p = kProbFloor;
  }
  return -std::log(p);
}

PairGrad coscos2_loss_grad(const Vector& x1, const Vector& x2, bool same) {
  PairGrad out;
  const double cos = cosine_similarity(x1, x2);
  const Vector dcos1 = cosine_grad_wrt_first(x1, x2);
  const Vector dcos2 = cosine_grad_wrt_first(x2, x1);
  if (same) {
    out.value = 0.5 * (1.0 - cos);
    out.grad1 = -0.5 * dcos1;
    out.grad2 = -0.5 * dcos2;
  } else {
    out.value = cos * cos;
    out.grad1 = 2.0 * cos * dcos1;
    out.grad2 = 2.0 * cos * dcos2;
  }
  return out;
}

TripletGrad cos_hinge_loss_grad(const Vector& x1, const Vector& x2, const Vector& x3,
                                double margin, DistanceKind distance) {
  TripletGrad out;
  const double d12 = pair_distance(x1, x2, distance);
  const double d13 = pair_distance(x1, x3, distance);
  const double active = margin + d12 - d13;
  if (active <= 0.0) {
    out.value = 0.0;
    out.grad1 = Vector::Zero(x1.size());
    out.grad2 = Vector::Zero(x2.size());
    out.grad3 = Vector::Zero(x3.size());
    return out;
  }
  out.value = active;
  if (distance == DistanceKind::Cosine) {
    out.grad1 = -0.5 * cosine_grad_wrt_first(x1, x2) + 0.5 * cosine_grad_wrt_first(x1, x3);
    out.grad2 = -0.5 * cosine_grad_wrt_first(x2, x1);
    out.grad3 = 0.5 * cosine_grad_wrt_first(x3, x1);
  } else {
    auto unit = [](const Vector& d) {
      const double n = d.norm();
      return n < kNormFloor ? Vector(Vector::Zero(d.size())) : Vector(d / n);
    };
    out.grad1 = unit(x1 - x2) - unit(x1 - x3);
    out.grad2 = unit(x2 - x1);
    out.grad3 = unit(x3 - x1);
  }
  return out;
}

Vector cross_entropy_output_grad(const Vector& predicted, Index target) {
  if (target < 0 || target >= predicted.size())
    throw std::invalid_argument("cross_entropy: target out of range");
  Vector g = Vector::Zero(predicted.size());
  g[target] = -1.0 / std::max(predicted[target], kProbFloor);
  return g;
}

Vector cross_entropy_logit_grad(const Vector& predicted, Index target) {
  if (target < 0 || target >= predicted.size())
    throw std::invalid_argument("cross_entropy: target out of range");
  Vector g = predicted;
  g[target] -= 1.0;
  return g;
}

}  // namespace awe
