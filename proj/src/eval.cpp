#include "awe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "awe/io.hpp"
#include "awe/parallel.hpp"

namespace awe {

ScoredPairList score_pairs(const EmbeddingSet& embeddings, DistanceKind distance) {
  const std::size_t n = embeddings.size();
  if (n < 2) throw std::invalid_argument("score_pairs: need at least 2 embeddings");
  for (std::size_t i = 0; i < n; ++i)
    if (distance == DistanceKind::Cosine && embeddings.vectors.row(i).norm() < 1e-12)
      throw std::invalid_argument("score_pairs: degenerate embedding for segment " +
                                  std::to_string(i) + " (\"" + embeddings.labels[i] + "\")");
  ScoredPairList scored;
  scored.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector xi = embeddings.vectors.row(i).transpose();
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vector xj = embeddings.vectors.row(j).transpose();
      scored.push_back(
          {pair_distance(xi, xj, distance), embeddings.labels[i] == embeddings.labels[j]});
    }
  }
  return scored;
}

double dtw_distance(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw std::invalid_argument("dtw: frame dimension mismatch");
  if (x.rows() < 1 || y.rows() < 1) throw std::invalid_argument("dtw: empty sequence");
  const Index n = x.rows();
  const Index m = y.rows();

  Vector nx(n), ny(m);
  for (Index i = 0; i < n; ++i) {
    nx[i] = x.row(i).norm();
    if (nx[i] < 1e-12) throw std::invalid_argument("dtw: degenerate frame in first sequence");
  }
  for (Index j = 0; j < m; ++j) {
    ny[j] = y.row(j).norm();
    if (ny[j] < 1e-12) throw std::invalid_argument("dtw: degenerate frame in second sequence");
  }

  auto frame_cost = [&](Index i, Index j) {
    return 0.5 * (1.0 - x.row(i).dot(y.row(j)) / (nx[i] * ny[j]));
  };

  // Per cell: cheapest accumulated cost, and the smallest path length
  // among paths achieving it.
  struct Cell {
    double cost;
    Index len;
  };
  std::vector<Cell> prev(m), cur(m);

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double d = frame_cost(i, j);
      Cell best;
      if (i == 0 && j == 0) {
        best = {0.0, 0};
      } else {
        best = {std::numeric_limits<double>::infinity(), 0};
        auto consider = [&](const Cell& c) {
          if (c.cost < best.cost || (c.cost == best.cost && c.len < best.len)) best = c;
        };
        if (i > 0 && j > 0) consider(prev[j - 1]);
        if (i > 0) consider(prev[j]);
        if (j > 0) consider(cur[j - 1]);
      }
      cur[j] = {best.cost + d, best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell& end = prev[m - 1];
  return end.cost / static_cast<double>(end.len);
}

ScoredPairList score_pairs_dtw(const SegmentArchive& archive, int threads) {
  const std::size_t n = archive.size();
  if (n < 2) throw std::invalid_argument("score_pairs_dtw: need at least 2 segments");
  const std::size_t num_pairs = n * (n - 1) / 2;
  ScoredPairList scored(num_pairs);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(num_pairs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  run_chunked(num_pairs, threads, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto [i, j] = pairs[k];
      scored[k] = {dtw_distance(archive.segments[i].frames, archive.segments[j].frames),
                   archive.segments[i].word_label == archive.segments[j].word_label};
    }
  });
  return scored;
}

PRCurve average_precision(const ScoredPairList& scored) {
  std::size_t total_pos = 0;
  for (const ScoredPair& p : scored) {
    if (!std::isfinite(p.distance)) throw std::invalid_argument("average_precision: non-finite distance");
    total_pos += p.same_type;
  }
  if (total_pos == 0)
    throw std::invalid_argument("average_precision: no same-type pair, AP undefined");

  ScoredPairList sorted = scored;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.distance < b.distance; });

  PRCurve curve;
  std::size_t tp = 0, accepted = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].distance == sorted[i].distance) {
      tp += sorted[j].same_type;
      ++accepted;
      ++j;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(accepted);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    curve.ap += precision * (recall - prev_recall);
    curve.points.push_back({sorted[i].distance, precision, recall});
    prev_recall = recall;
    i = j;
  }
  return curve;
}

namespace {

PRCurve finish_report(std::size_t num_segments, const ScoredPairList& scored,
                      const ReportOptions& options, std::ostream& summary, const char* mode) {
  PRCurve curve = average_precision(scored);
  std::size_t positives = 0;
  for (const ScoredPair& p : scored) positives += p.same_type;
  summary << std::setprecision(17) << "mode=" << mode << " segments=" << num_segments
          << " pairs=" << scored.size() << " same_type_pairs=" << positives << " ap=" << curve.ap
          << "\n";
  if (options.pr_csv) {
    std::ofstream os(*options.pr_csv);
    if (!os) throw std::runtime_error("cannot open " + options.pr_csv->string() + " for writing");
    write_pr_csv(curve, os);
  }
  if (options.pair_dump) {
    std::ofstream os(*options.pair_dump, std::ios::binary);
    if (!os)
      throw std::runtime_error("cannot open " + options.pair_dump->string() + " for writing");
    write_pair_dump(num_segments, scored, os);
  }
  return curve;
}

}  // namespace

PRCurve same_different_report(const EmbeddingSet& embeddings, const ReportOptions& options,
                              std::ostream& summary) {
  const ScoredPairList scored = score_pairs(embeddings, options.distance);
  const char* mode = options.distance == DistanceKind::Cosine ? "cosine" : "euclidean";
  return finish_report(embeddings.size(), scored, options, summary, mode);
}

PRCurve same_different_report_dtw(const SegmentArchive& archive, const ReportOptions& options,
                                  std::ostream& summary) {
  const ScoredPairList scored = score_pairs_dtw(archive, options.threads);
  return finish_report(archive.size(), scored, options, summary, "dtw");
}

void write_pr_csv(const PRCurve& curve, std::ostream& os) {
  os << "threshold,precision,recall\n" << std::setprecision(17);
  for (const PRPoint& p : curve.points)
    os << p.threshold << "," << p.precision << "," << p.recall << "\n";
}

void write_pair_dump(std::size_t num_segments, const ScoredPairList& scored, std::ostream& os) {
  io::put_u32(os, static_cast<std::uint32_t>(num_segments));
  for (const ScoredPair& p : scored) {
    io::put_f64(os, p.distance);
    os.put(p.same_type ? 1 : 0);
  }
  if (!os) throw std::runtime_error("pair dump write failed");
}

}  // namespace awe
