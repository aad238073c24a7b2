#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "awe/embedding.hpp"

namespace awe {

// Linear discriminant analysis fitted on labelled embeddings.
//
// Binary format (little-endian): magic "AWEL"; u64 header length; JSON
// header {"input_dim", "output_dim"}; mean (input_dim f64); projection
// (input_dim x output_dim f64, row-major).
struct LdaModel {
  Index input_dim = 0;
  Index output_dim = 0;
  Vector mean;        // global mean of the training embeddings
  Matrix projection;  // input_dim x output_dim, columns ordered by descending eigenvalue
};

// Within-class scatter is shrunk as S_w + shrinkage * trace(S_w)/d * I;
// the projection holds the top eigenvectors of S_w^{-1} S_b, solved via
// Cholesky whitening of the regularized S_w. target_dim is clamped to
// num_classes - 1 (with a warning) when it exceeds that bound.
LdaModel lda_fit(const EmbeddingSet& embeddings, Index target_dim, double shrinkage = 1e-4);

// x -> projection^T (x - mean); labels carry over.
EmbeddingSet lda_transform(const LdaModel& model, const EmbeddingSet& embeddings);

void write_lda(const LdaModel& model, std::ostream& os);
LdaModel read_lda(std::istream& is);
void write_lda_file(const LdaModel& model, const std::filesystem::path& path);
LdaModel read_lda_file(const std::filesystem::path& path);

}  // namespace awe
