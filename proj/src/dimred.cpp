#include "awe/dimred.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "awe/io.hpp"

namespace awe {

LdaModel lda_fit(const EmbeddingSet& embeddings, Index target_dim, double shrinkage) {
  if (target_dim < 1) throw std::invalid_argument("lda_fit: target_dim must be >= 1");
  if (shrinkage < 0.0) throw std::invalid_argument("lda_fit: shrinkage must be >= 0");
  const Index d = embeddings.dim;
  const Index n = embeddings.vectors.rows();

  std::map<std::string, std::vector<Index>> classes;
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    classes[embeddings.labels[i]].push_back(static_cast<Index>(i));
  if (classes.size() < 2) throw std::invalid_argument("lda_fit: need at least 2 classes");
  for (const auto& [label, idx] : classes)
    if (idx.size() < 2)
      throw std::invalid_argument("lda_fit: class \"" + label + "\" has fewer than 2 samples");

  const Index rank_bound = static_cast<Index>(classes.size()) - 1;
  if (target_dim > std::min(rank_bound, d)) {
    std::cerr << "warning: lda target_dim " << target_dim << " clamped to "
              << std::min(rank_bound, d) << "\n";
    target_dim = std::min(rank_bound, d);
  }

  const Vector mean = embeddings.vectors.colwise().mean().transpose();

  Matrix sw = Matrix::Zero(d, d);
  Matrix sb = Matrix::Zero(d, d);
  for (const auto& [label, idx] : classes) {
    Vector class_mean = Vector::Zero(d);
    for (Index i : idx) class_mean += embeddings.vectors.row(i).transpose();
    class_mean /= static_cast<double>(idx.size());
    for (Index i : idx) {
      const Vector diff = embeddings.vectors.row(i).transpose() - class_mean;
      sw.noalias() += diff * diff.transpose();
    }
    const Vector offset = class_mean - mean;
    sb.noalias() += static_cast<double>(idx.size()) * offset * offset.transpose();
  }

  const double ridge = shrinkage * sw.trace() / static_cast<double>(d);
  Matrix sw_reg = sw + ridge * Matrix::Identity(d, d);

  Eigen::LLT<Eigen::MatrixXd> llt(sw_reg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("lda_fit: regularized within-class scatter is singular");

  // Whiten: M = L^{-1} S_b L^{-T} is symmetric with the same spectrum as
  // S_w^{-1} S_b.
  Eigen::MatrixXd a = llt.matrixL().solve(Eigen::MatrixXd(sb));
  Eigen::MatrixXd m = llt.matrixL().solve(Eigen::MatrixXd(a.transpose())).transpose();
  m = 0.5 * (m + m.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw std::runtime_error("lda_fit: eigensolver failed");

  LdaModel model;
  model.input_dim = d;
  model.output_dim = target_dim;
  model.mean = mean;
  model.projection.resize(d, target_dim);
  // Eigenvalues come back ascending; take the top target_dim, descending.
  for (Index k = 0; k < target_dim; ++k) {
    const Eigen::VectorXd u = eig.eigenvectors().col(d - 1 - k);
    Eigen::VectorXd v = llt.matrixU().solve(u);
    v.normalize();
    for (Index j = 0; j < d; ++j) {
      if (std::abs(v[j]) > 1e-12) {
        if (v[j] < 0.0) v = -v;
        break;
      }
    }
    model.projection.col(k) = v;
  }
  if (!model.projection.allFinite())
    throw std::runtime_error("lda_fit: projection has non-finite entries");
  (void)n;
  return model;
}

EmbeddingSet lda_transform(const LdaModel& model, const EmbeddingSet& embeddings) {
  if (embeddings.dim != model.input_dim)
    throw std::invalid_argument("lda_transform: embedding dim " + std::to_string(embeddings.dim) +
                                " does not match model input dim " +
                                std::to_string(model.input_dim));
  Matrix projected =
      (embeddings.vectors.rowwise() - model.mean.transpose()) * model.projection;
  return make_embedding_set(std::move(projected), embeddings.labels);
}

namespace {
constexpr char kMagic[4] = {'A', 'W', 'E', 'L'};
}

void write_lda(const LdaModel& model, std::ostream& os) {
  nlohmann::json header{{"input_dim", model.input_dim}, {"output_dim", model.output_dim}};
  const std::string header_str = header.dump();
  os.write(kMagic, 4);
  io::put_u64(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  io::put_vector(os, model.mean);
  io::put_matrix(os, model.projection);
  if (!os) throw std::runtime_error("lda write failed");
}

LdaModel read_lda(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad lda magic", 0);
  const std::uint64_t len = io::get_u64(is, "header length");
  const std::string header_str = io::get_string(is, len, "header");
  nlohmann::json header = nlohmann::json::parse(header_str, nullptr, false);
  if (header.is_discarded() || !header.contains("input_dim") || !header.contains("output_dim"))
    throw ParseError("bad lda header", 12);
  LdaModel model;
  model.input_dim = header.at("input_dim").get<Index>();
  model.output_dim = header.at("output_dim").get<Index>();
  if (model.input_dim < 1 || model.output_dim < 1 || model.output_dim > model.input_dim)
    throw ParseError("invalid lda dimensions", 12);
  model.mean = io::get_vector(is, model.input_dim, "lda mean");
  model.projection = io::get_matrix(is, model.input_dim, model.output_dim, "lda projection");
  return model;
}

void write_lda_file(const LdaModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_lda(model, os);
}

LdaModel read_lda_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_lda(is);
}

}  // namespace awe
