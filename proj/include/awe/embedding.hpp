#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "awe/matrix.hpp"

namespace awe {

// Fixed-dimensional embeddings, one row per segment, aligned with word
// labels.
//
// Binary format (little-endian): magic "AWEE"; u32 count; u32 dim; then
// per item: u16 label byte-length + UTF-8 label; dim f64 values.
struct EmbeddingSet {
  Index dim = 0;
  Matrix vectors;  // count x dim
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
};

EmbeddingSet make_embedding_set(Matrix vectors, std::vector<std::string> labels);

void write_embeddings(const EmbeddingSet& set, std::ostream& os);
EmbeddingSet read_embeddings(std::istream& is);
void write_embeddings_file(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embeddings_file(const std::filesystem::path& path);

}  // namespace awe
