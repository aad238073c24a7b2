#include "awe/embedding.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "awe/io.hpp"

namespace awe {

namespace {
constexpr char kMagic[4] = {'A', 'W', 'E', 'E'};
}

EmbeddingSet make_embedding_set(Matrix vectors, std::vector<std::string> labels) {
  if (static_cast<std::size_t>(vectors.rows()) != labels.size())
    throw std::invalid_argument("embedding set: row/label count mismatch");
  if (!vectors.allFinite())
    throw std::invalid_argument("embedding set: non-finite values");
  EmbeddingSet set;
  set.dim = vectors.cols();
  set.vectors = std::move(vectors);
  set.labels = std::move(labels);
  return set;
}

void write_embeddings(const EmbeddingSet& set, std::ostream& os) {
  os.write(kMagic, 4);
  io::put_u32(os, static_cast<std::uint32_t>(set.size()));
  io::put_u32(os, static_cast<std::uint32_t>(set.dim));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string& label = set.labels[i];
    if (label.size() > 0xffff) throw std::invalid_argument("label longer than 65535 bytes");
    io::put_u16(os, static_cast<std::uint16_t>(label.size()));
    os.write(label.data(), static_cast<std::streamsize>(label.size()));
    for (Index j = 0; j < set.dim; ++j) io::put_f64(os, set.vectors(i, j));
  }
  if (!os) throw std::runtime_error("embedding write failed");
}

EmbeddingSet read_embeddings(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad embedding magic", 0);
  const std::uint32_t count = io::get_u32(is, "embedding count");
  const std::uint32_t dim = io::get_u32(is, "embedding dim");
  EmbeddingSet set;
  set.dim = static_cast<Index>(dim);
  set.vectors.resize(count, dim);
  set.labels.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = io::get_u16(is, "label length");
    const std::size_t at = static_cast<std::size_t>(is.tellg());
    std::string label = io::get_string(is, len, "label");
    if (!io::valid_utf8(label)) throw ParseError("label is not valid UTF-8", at);
    set.labels.push_back(std::move(label));
    for (std::uint32_t j = 0; j < dim; ++j) set.vectors(i, j) = io::get_f64(is, "embedding value");
  }
  return set;
}

void write_embeddings_file(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_embeddings(set, os);
}

EmbeddingSet read_embeddings_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_embeddings(is);
}

}  // namespace awe
