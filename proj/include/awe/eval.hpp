#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "awe/data.hpp"
#include "awe/embedding.hpp"
#include "awe/losses.hpp"

namespace awe {

// One entry per unordered segment pair, in (i, j), i < j lexicographic
// order.
struct ScoredPair {
  double distance = 0.0;
  bool same_type = false;
};

using ScoredPairList = std::vector<ScoredPair>;

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  double ap = 0.0;
};

ScoredPairList score_pairs(const EmbeddingSet& embeddings,
                           DistanceKind distance = DistanceKind::Cosine);

inline ScoredPairList score_pairs_cosine(const EmbeddingSet& embeddings) {
  return score_pairs(embeddings, DistanceKind::Cosine);
}

// Alignment cost between two frame sequences (frames are rows), using
// per-frame cosine distances and steps (1,0), (0,1), (1,1). The minimal
// accumulated cost is divided by the length of the cheapest path (ties on
// cost resolved toward the shorter path).
double dtw_distance(const Matrix& x, const Matrix& y);

ScoredPairList score_pairs_dtw(const SegmentArchive& archive, int threads = 1);

// Threshold sweep over ascending distance with tied distances entering as
// one block; ap is the block-wise rectangle rule
// sum_t precision(t) * (recall(t) - recall(t-1)).
PRCurve average_precision(const ScoredPairList& scored);

struct ReportOptions {
  DistanceKind distance = DistanceKind::Cosine;
  std::optional<std::filesystem::path> pr_csv;
  std::optional<std::filesystem::path> pair_dump;
  int threads = 1;
};

PRCurve same_different_report(const EmbeddingSet& embeddings, const ReportOptions& options,
                              std::ostream& summary);

// The frame-level baseline: DTW on unpadded (typically CMVN) frames.
PRCurve same_different_report_dtw(const SegmentArchive& archive, const ReportOptions& options,
                                  std::ostream& summary);

void write_pr_csv(const PRCurve& curve, std::ostream& os);

// Binary dump: u32 n (segment count), then n(n-1)/2 records of f64
// distance + u8 same-type flag, pair order as in ScoredPairList.
void write_pair_dump(std::size_t num_segments, const ScoredPairList& scored, std::ostream& os);

}  // namespace awe
