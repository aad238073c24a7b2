#include "awe/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "awe/io.hpp"

namespace awe {

namespace {

constexpr char kMagic[4] = {'A', 'W', 'E', '1'};

void validate_segment(const Segment& s, Index dim, std::size_t index) {
  if (s.frames.rows() < 1)
    throw std::invalid_argument("segment " + std::to_string(index) + " (\"" + s.word_label +
                                "\") has no frames");
  if (s.frames.cols() != dim) {
    std::ostringstream os;
    os << "non-uniform frame dimension: segment " << index << " (\"" << s.word_label << "\") has b="
       << s.frames.cols() << ", archive has b=" << dim;
    throw std::invalid_argument(os.str());
  }
  if (!s.frames.allFinite())
    throw std::invalid_argument("segment " + std::to_string(index) + " (\"" + s.word_label +
                                "\") contains non-finite values");
}

}  // namespace

namespace io {

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    int extra;
    unsigned cp_min;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp_min = 0x80;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp_min = 0x800;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp_min = 0x10000;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    unsigned cp = c & (0x3f >> extra);
    for (int k = 1; k <= extra; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (cp < cp_min || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += extra + 1;
  }
  return true;
}

}  // namespace io

SegmentArchive make_archive(std::vector<Segment> segments, Index dim_if_empty) {
  SegmentArchive archive;
  archive.dim = segments.empty() ? dim_if_empty : segments.front().frames.cols();
  archive.segments = std::move(segments);
  for (std::size_t i = 0; i < archive.segments.size(); ++i)
    validate_segment(archive.segments[i], archive.dim, i);
  return archive;
}

void write_archive(const SegmentArchive& archive, std::ostream& os) {
  for (std::size_t i = 0; i < archive.size(); ++i)
    validate_segment(archive.segments[i], archive.dim, i);
  os.write(kMagic, 4);
  io::put_u32(os, static_cast<std::uint32_t>(archive.size()));
  io::put_u32(os, static_cast<std::uint32_t>(archive.dim));
  for (const Segment& s : archive.segments) {
    if (s.word_label.size() > 0xffff || s.group_id.size() > 0xffff)
      throw std::invalid_argument("label or group longer than 65535 bytes");
    io::put_u16(os, static_cast<std::uint16_t>(s.word_label.size()));
    os.write(s.word_label.data(), static_cast<std::streamsize>(s.word_label.size()));
    io::put_u16(os, static_cast<std::uint16_t>(s.group_id.size()));
    os.write(s.group_id.data(), static_cast<std::streamsize>(s.group_id.size()));
    io::put_u32(os, static_cast<std::uint32_t>(s.frames.rows()));
    for (Index t = 0; t < s.frames.rows(); ++t)
      for (Index j = 0; j < s.frames.cols(); ++j)
        io::put_f32(os, static_cast<float>(s.frames(t, j)));
  }
  if (!os) throw std::runtime_error("archive write failed");
}

SegmentArchive read_archive(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad archive magic", 0);

  const std::uint32_t count = io::get_u32(is, "segment count");
  const std::uint32_t dim = io::get_u32(is, "frame dimension");
  if (count > 0 && dim == 0) throw ParseError("frame dimension is zero", 8);

  SegmentArchive archive;
  archive.dim = static_cast<Index>(dim);
  archive.segments.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    Segment s;
    const std::uint16_t label_len = io::get_u16(is, "label length");
    std::size_t at = static_cast<std::size_t>(is.tellg());
    s.word_label = io::get_string(is, label_len, "label");
    if (!io::valid_utf8(s.word_label)) throw ParseError("label is not valid UTF-8", at);
    const std::uint16_t group_len = io::get_u16(is, "group length");
    at = static_cast<std::size_t>(is.tellg());
    s.group_id = io::get_string(is, group_len, "group");
    if (!io::valid_utf8(s.group_id)) throw ParseError("group is not valid UTF-8", at);
    const std::uint32_t frames = io::get_u32(is, "frame count");
    at = static_cast<std::size_t>(is.tellg());
    if (frames == 0) throw ParseError("segment has zero frames", at);
    s.frames.resize(frames, dim);
    for (Index t = 0; t < s.frames.rows(); ++t)
      for (Index j = 0; j < s.frames.cols(); ++j) {
        at = static_cast<std::size_t>(is.tellg());
        const float v = io::get_f32(is, "frame value");
        if (!std::isfinite(v)) throw ParseError("non-finite frame value", at);
        s.frames(t, j) = static_cast<double>(v);
      }
    archive.segments.push_back(std::move(s));
  }
  return archive;
}

void write_archive_file(const SegmentArchive& archive, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_archive(archive, os);
}

SegmentArchive read_archive_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_archive(is);
}

SegmentArchive cmvn_normalize(const SegmentArchive& archive) {
  const Index b = archive.dim;
  struct Moments {
    Vector sum, sq_sum;
    double count = 0.0;
  };
  std::map<std::string, Moments> groups;
  for (const Segment& s : archive.segments) {
    Moments& m = groups.try_emplace(s.group_id, Moments{Vector::Zero(b), Vector::Zero(b)}).second;
    m.sum += s.frames.colwise().sum().transpose();
    m.count += static_cast<double>(s.frames.rows());
  }
  std::map<std::string, Vector> means;
  for (auto& [gid, m] : groups) means.emplace(gid, Vector(m.sum / m.count));
  for (const Segment& s : archive.segments) {
    Moments& m = groups.at(s.group_id);
    const Vector& mean = means.at(s.group_id);
    m.sq_sum += (s.frames.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }

  SegmentArchive out;
  out.dim = archive.dim;
  out.segments.reserve(archive.size());
  for (const Segment& s : archive.segments) {
    const Moments& m = groups.at(s.group_id);
    const Vector& mean = means.at(s.group_id);
    Vector scale(b);
    for (Index j = 0; j < b; ++j) {
      const double var = m.sq_sum[j] / m.count;
      scale[j] = var < 1e-8 ? 1.0 : 1.0 / std::sqrt(var);
    }
    Segment t;
    t.word_label = s.word_label;
    t.group_id = s.group_id;
    t.frames = (s.frames.rowwise() - mean.transpose()).array().rowwise() *
               scale.transpose().array();
    out.segments.push_back(std::move(t));
  }
  return out;
}

Matrix pad_segment(const Segment& segment, const PadConfig& config) {
  if (config.n_pad < 1) throw std::invalid_argument("pad: n_pad must be >= 1");
  const Index T = segment.frames.rows();
  const Index b = segment.frames.cols();
  if (T > config.n_pad) {
    if (config.policy == OverflowPolicy::Error) {
      std::ostringstream os;
      os << "segment \"" << segment.word_label << "\" has " << T << " frames, exceeding n_pad="
         << config.n_pad;
      throw std::invalid_argument(os.str());
    }
    const Index start = (T - config.n_pad) / 2;
    Matrix out(b, config.n_pad);
    out = segment.frames.block(start, 0, config.n_pad, b).transpose();
    return out;
  }
  Matrix out = Matrix::Zero(b, config.n_pad);
  out.block(0, 0, b, T) = segment.frames.transpose();
  return out;
}

PairSet extract_same_pairs(const SegmentArchive& archive) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < archive.size(); ++i)
    by_label[archive.segments[i].word_label].push_back(i);
  PairSet pairs;
  for (const auto& [label, idx] : by_label)
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) pairs.emplace_back(idx[a], idx[b]);
  return pairs;
}

std::vector<Triplet> sample_triplets(const PairSet& pairs, const SegmentArchive& archive,
                                     std::mt19937_64& rng) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < archive.size(); ++i)
    by_label[archive.segments[i].word_label].push_back(i);

  std::vector<Triplet> triplets;
  triplets.reserve(pairs.size());
  for (const auto& [m, n] : pairs) {
    const std::string& anchor_label = archive.segments[m].word_label;
    const std::size_t others = archive.size() - by_label.at(anchor_label).size();
    if (others == 0)
      throw std::runtime_error("no segment with a label different from \"" + anchor_label + "\"");
    std::uniform_int_distribution<std::size_t> dist(0, others - 1);
    std::size_t k = dist(rng);
    std::size_t negative = archive.size();
    for (const auto& [label, idx] : by_label) {
      if (label == anchor_label) continue;
      if (k < idx.size()) {
        negative = idx[k];
        break;
      }
      k -= idx.size();
    }
    triplets.push_back({m, n, negative});
  }
  return triplets;
}

std::pair<SegmentArchive, std::map<std::string, int>> vocab_filter(const SegmentArchive& archive,
                                                                   int min_count) {
  if (min_count < 1) throw std::invalid_argument("vocab_filter: min_count must be >= 1");
  std::map<std::string, int> counts;
  for (const Segment& s : archive.segments) ++counts[s.word_label];

  std::map<std::string, int> classes;
  int next = 0;
  for (const auto& [label, c] : counts)
    if (c >= min_count) classes.emplace(label, next++);
  if (classes.empty()) throw std::runtime_error("vocab_filter: no label reaches min_count");

  SegmentArchive out;
  out.dim = archive.dim;
  for (const Segment& s : archive.segments)
    if (classes.count(s.word_label)) out.segments.push_back(s);
  return {std::move(out), std::move(classes)};
}

namespace {

// Smooth trajectory on [0, 1]: three sinusoids per coordinate.
struct SmoothCurve {
  Matrix amp;    // dim x 3
  Matrix freq;   // dim x 3
  Matrix phase;  // dim x 3

  static SmoothCurve random(Index dim, std::mt19937_64& rng) {
    SmoothCurve c;
    c.amp.resize(dim, 3);
    c.freq.resize(dim, 3);
    c.phase.resize(dim, 3);
    std::normal_distribution<double> amp_dist(0.0, 1.0 / std::sqrt(3.0));
    std::uniform_real_distribution<double> freq_dist(0.5, 2.5);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);
    for (Index j = 0; j < dim; ++j)
      for (int k = 0; k < 3; ++k) {
        c.amp(j, k) = amp_dist(rng);
        c.freq(j, k) = freq_dist(rng);
        c.phase(j, k) = phase_dist(rng);
      }
    return c;
  }

  Vector at(double u) const {
    Vector v = Vector::Zero(amp.rows());
    for (Index j = 0; j < amp.rows(); ++j)
      for (int k = 0; k < 3; ++k)
        v[j] += amp(j, k) * std::sin(2.0 * M_PI * freq(j, k) * u + phase(j, k));
    return v;
  }
};

// Shared carrier keeps frame-level similarity high across types, so type
// identity lives in a lower-energy component of each frame.
constexpr double kCarrierScale = 1.0;
constexpr double kTypeScale = 0.6;
constexpr int kGroupsPerSplit = 6;

std::string type_label(int t) {
  std::ostringstream os;
  os << "w" << (t < 10 ? "0" : "") << t;
  return os.str();
}

}  // namespace

SynthSplits synth_generate(const SynthConfig& config, std::uint64_t seed) {
  if (config.num_types < 2) throw std::invalid_argument("synth: num_types must be >= 2");
  if (config.tokens_per_type < 2)
    throw std::invalid_argument("synth: tokens_per_type must be >= 2");
  if (config.dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
  if (config.duration_min < 2 || config.duration_max < config.duration_min)
    throw std::invalid_argument("synth: need 2 <= duration_min <= duration_max");
  if (config.warp_strength < 0.0 || config.noise_sigma < 0.0)
    throw std::invalid_argument("synth: warp_strength and noise_sigma must be >= 0");
  if (config.unseen_type_fraction < 0.0 || config.unseen_type_fraction >= 1.0)
    throw std::invalid_argument("synth: unseen_type_fraction must lie in [0, 1)");

  std::mt19937_64 rng(seed);
  const Index b = config.dim;

  const SmoothCurve carrier = SmoothCurve::random(b, rng);
  std::vector<SmoothCurve> types;
  types.reserve(config.num_types);
  for (int t = 0; t < config.num_types; ++t) types.push_back(SmoothCurve::random(b, rng));

  // Tokens in (type, token) order; durations, warps and noise all come
  // from the run's single engine.
  std::uniform_int_distribution<int> dur_dist(config.duration_min, config.duration_max);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);
  std::normal_distribution<double> noise_dist(0.0, 1.0);

  std::vector<Segment> tokens;
  std::vector<int> token_type;
  for (int t = 0; t < config.num_types; ++t) {
    for (int k = 0; k < config.tokens_per_type; ++k) {
      const int duration = dur_dist(rng);
      const double p1 = phase_dist(rng);
      const double p2 = phase_dist(rng);

      // Monotone warp: integrate a positive, smoothly varying rate.
      std::vector<double> rate(duration - 1);
      for (int i = 0; i + 1 < duration; ++i) {
        const double v = static_cast<double>(i) / std::max(1, duration - 2);
        rate[i] = std::exp(0.5 * config.warp_strength *
                           (std::sin(2.0 * M_PI * v + p1) + 0.5 * std::sin(4.0 * M_PI * v + p2)));
      }
      const double total = std::accumulate(rate.begin(), rate.end(), 0.0);

      Segment s;
      s.word_label = type_label(t);
      s.frames.resize(duration, b);
      double acc = 0.0;
      for (int i = 0; i < duration; ++i) {
        const double u = i == 0 ? 0.0 : (acc += rate[i - 1]) / total;
        const Vector f = kCarrierScale * carrier.at(u) + kTypeScale * types[t].at(u);
        for (Index j = 0; j < b; ++j)
          s.frames(i, j) = f[j] + config.noise_sigma * noise_dist(rng);
      }
      tokens.push_back(std::move(s));
      token_type.push_back(t);
    }
  }

  // Types absent from training (and dev) end up in the test split only.
  std::vector<int> type_order(config.num_types);
  std::iota(type_order.begin(), type_order.end(), 0);
  std::shuffle(type_order.begin(), type_order.end(), rng);
  const int num_unseen =
      static_cast<int>(std::llround(config.unseen_type_fraction * config.num_types));
  std::vector<bool> unseen(config.num_types, false);
  for (int i = 0; i < num_unseen; ++i) unseen[type_order[i]] = true;

  const std::size_t total = tokens.size();
  const std::size_t dev_target = static_cast<std::size_t>(std::llround(total / 6.0));
  const std::size_t test_target = static_cast<std::size_t>(std::llround(total / 6.0));

  std::vector<std::size_t> test_idx, seen_idx;
  for (std::size_t i = 0; i < total; ++i)
    (unseen[token_type[i]] ? test_idx : seen_idx).push_back(i);
  if (test_idx.size() > test_target)
    throw std::invalid_argument("synth: unseen types exceed the test split size");
  std::shuffle(seen_idx.begin(), seen_idx.end(), rng);

  std::size_t pos = 0;
  while (test_idx.size() < test_target) test_idx.push_back(seen_idx[pos++]);
  std::vector<std::size_t> dev_idx(seen_idx.begin() + pos, seen_idx.begin() + pos + dev_target);
  pos += dev_target;
  std::vector<std::size_t> train_idx(seen_idx.begin() + pos, seen_idx.end());

  auto build_split = [&](const std::vector<std::size_t>& idx, const std::string& prefix) {
    // Per-group channel: feature offset and gain, undone by CMVN. Tied to
    // noise_sigma so a noiseless corpus has a clean channel.
    std::vector<Vector> offsets(kGroupsPerSplit), gains(kGroupsPerSplit);
    for (int g = 0; g < kGroupsPerSplit; ++g) {
      offsets[g].resize(b);
      gains[g].resize(b);
      for (Index j = 0; j < b; ++j) {
        offsets[g][j] = config.noise_sigma * noise_dist(rng);
        gains[g][j] = std::exp(config.noise_sigma / 3.0 * noise_dist(rng));
      }
    }
    std::uniform_int_distribution<int> group_dist(0, kGroupsPerSplit - 1);
    std::vector<Segment> segs;
    segs.reserve(idx.size());
    for (std::size_t i : idx) {
      Segment s = tokens[i];
      const int g = group_dist(rng);
      s.group_id = prefix + "_g" + std::to_string(g);
      s.frames = (s.frames.array().rowwise() * gains[g].transpose().array()).rowwise() +
                 offsets[g].transpose().array();
      segs.push_back(std::move(s));
    }
    return make_archive(std::move(segs), b);
  };

  SynthSplits splits;
  splits.train = build_split(train_idx, "trn");
  splits.dev = build_split(dev_idx, "dev");
  splits.test = build_split(test_idx, "tst");
  return splits;
}

}  // namespace awe
