#pragma once

#include <Eigen/Dense>

namespace awe {

// All numerics run in 64-bit reals. Frame matrices, activations and
// parameter blocks share one dense row-major matrix type so that binary
// serialization and flattening are plain memory walks.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Shape {
  Index rows = 0;
  Index cols = 0;
  bool operator==(const Shape&) const = default;
};

// Row-major flatten: row 0 first. Inverse of reshape_like.
inline Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix reshape(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace awe
