#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "awe/matrix.hpp"

namespace awe {

// One spoken word token: frames is a T x b matrix, one feature frame per
// row. group_id names the recording group (conversation side) used for
// CMVN.
struct Segment {
  std::string word_label;
  std::string group_id;
  Matrix frames;
};

// Ordered segment collection with a uniform frame dimension.
//
// Binary archive format (little-endian):
//   magic "AWE1"; u32 segment count; u32 dim b; then per segment:
//   u16 label byte-length + UTF-8 label; u16 group byte-length + UTF-8
//   group; u32 n_frames T; T*b IEEE-754 f32 values, frame-major.
// Values are widened to f64 on load and narrowed on store.
struct SegmentArchive {
  Index dim = 0;
  std::vector<Segment> segments;

  std::size_t size() const { return segments.size(); }
  bool empty() const { return segments.empty(); }
};

// Validates uniform frame dimension and T >= 1 for every segment.
SegmentArchive make_archive(std::vector<Segment> segments, Index dim_if_empty = 0);

void write_archive(const SegmentArchive& archive, std::ostream& os);
SegmentArchive read_archive(std::istream& is);
void write_archive_file(const SegmentArchive& archive, const std::filesystem::path& path);
SegmentArchive read_archive_file(const std::filesystem::path& path);

// Per group_id, pooling frames across the group's segments: remove the
// per-coordinate mean and scale to unit variance, unless the pooled
// variance is below 1e-8, in which case only the mean is removed.
SegmentArchive cmvn_normalize(const SegmentArchive& archive);

enum class OverflowPolicy { Error, CenterTruncate };

struct PadConfig {
  Index n_pad = 200;
  OverflowPolicy policy = OverflowPolicy::Error;
};

// Transposed frames (b x T) zero-extended on the right to b x n_pad.
// Segments longer than n_pad either raise an overflow error or keep the
// middle n_pad frames, per the policy.
Matrix pad_segment(const Segment& segment, const PadConfig& config);

// Unordered index pairs (m, n), m < n, of same-labelled segments.
using PairSet = std::vector<std::pair<std::size_t, std::size_t>>;

PairSet extract_same_pairs(const SegmentArchive& archive);

struct Triplet {
  std::size_t anchor, same, different;
};

// One triplet per pair: (anchor, same) is the pair, the negative is drawn
// uniformly from segments whose label differs from the anchor's.
std::vector<Triplet> sample_triplets(const PairSet& pairs, const SegmentArchive& archive,
                                     std::mt19937_64& rng);

// Keeps segments whose label occurs at least min_count times; class
// indices follow sorted label order.
std::pair<SegmentArchive, std::map<std::string, int>> vocab_filter(const SegmentArchive& archive,
                                                                   int min_count = 3);

// Synthetic word corpus: every type owns a smooth random template
// trajectory; tokens are time-warped resamplings of it plus Gaussian
// noise and a per-group channel (offset/scale), with durations uniform in
// [duration_min, duration_max]. A fraction of types appears only in the
// test split.
struct SynthConfig {
  int num_types = 30;
  int tokens_per_type = 20;
  int dim = 13;
  int duration_min = 40;
  int duration_max = 120;
  double warp_strength = 1.0;
  double noise_sigma = 0.3;
  double unseen_type_fraction = 0.1;
};

struct SynthSplits {
  SegmentArchive train, dev, test;
};

SynthSplits synth_generate(const SynthConfig& config, std::uint64_t seed);

}  // namespace awe
