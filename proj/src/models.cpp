#include "awe/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "awe/eval.hpp"
#include "awe/io.hpp"
#include "awe/parallel.hpp"

namespace awe {

namespace {

using nlohmann::json;

void append_conv_stack(std::vector<LayerSpec>& layers, const ArchConfig& arch) {
  if (arch.conv_filters.size() != arch.conv_widths.size() ||
      arch.conv_filters.size() != arch.pool_widths.size())
    throw std::invalid_argument("arch: conv_filters/conv_widths/pool_widths sizes differ");
  for (std::size_t i = 0; i < arch.conv_filters.size(); ++i) {
    layers.push_back(LayerSpec::conv1d(arch.conv_filters[i], arch.conv_widths[i]));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::maxpool(arch.pool_widths[i]));
  }
}

ModelSpec finish_classifier(ModelSpec spec, const std::vector<int>& hidden, int vocab_size,
                            std::optional<int> bottleneck) {
  if (vocab_size < 2) throw std::invalid_argument("classifier needs a vocabulary of >= 2 types");
  for (int h : hidden) {
    spec.layers.push_back(LayerSpec::affine(h));
    spec.layers.push_back(LayerSpec::relu());
  }
  if (bottleneck) {
    spec.bottleneck_layer = spec.layers.size();
    spec.layers.push_back(LayerSpec::affine(*bottleneck));
  }
  spec.layers.push_back(LayerSpec::affine(vocab_size));
  spec.layers.push_back(LayerSpec::softmax());
  validate_spec(spec);
  return spec;
}

}  // namespace

ModelSpec make_classifier_cnn_spec(const ArchConfig& arch, Index input_dim, Index n_pad,
                                   int vocab_size, std::optional<int> bottleneck) {
  ModelSpec spec;
  spec.kind = ModelKind::ClassifierCNN;
  spec.input_dim = input_dim;
  spec.n_pad = n_pad;
  append_conv_stack(spec.layers, arch);
  return finish_classifier(std::move(spec), arch.cnn_hidden, vocab_size, bottleneck);
}

ModelSpec make_classifier_dnn_spec(const ArchConfig& arch, Index input_dim, Index n_pad,
                                   int vocab_size, std::optional<int> bottleneck) {
  ModelSpec spec;
  spec.kind = ModelKind::ClassifierDNN;
  spec.input_dim = input_dim;
  spec.n_pad = n_pad;
  return finish_classifier(std::move(spec), arch.dnn_hidden, vocab_size, bottleneck);
}

ModelSpec make_siamese_spec(const ArchConfig& arch, Index input_dim, Index n_pad) {
  ModelSpec spec;
  spec.kind = ModelKind::SiameseCNN;
  spec.input_dim = input_dim;
  spec.n_pad = n_pad;
  append_conv_stack(spec.layers, arch);
  for (int h : arch.siamese_hidden) {
    spec.layers.push_back(LayerSpec::affine(h));
    spec.layers.push_back(LayerSpec::relu());
  }
  // Linear output layer: a ReLU here would restrict embedding angles.
  spec.layers.push_back(LayerSpec::affine(arch.embedding_dim));
  validate_spec(spec);
  return spec;
}

ModelSpec build_default_spec(ModelKind kind, int vocab_size, std::optional<int> bottleneck) {
  ArchConfig arch;
  arch.conv_filters = {96, 96};
  arch.conv_widths = {9, 8};
  arch.pool_widths = {3, 3};
  arch.cnn_hidden = {1024};
  arch.dnn_hidden = {2048, 2048};
  arch.siamese_hidden = {2048};
  arch.embedding_dim = 1024;
  switch (kind) {
    case ModelKind::ClassifierCNN:
      return make_classifier_cnn_spec(arch, 39, 200, vocab_size, bottleneck);
    case ModelKind::ClassifierDNN:
      return make_classifier_dnn_spec(arch, 39, 200, vocab_size, bottleneck);
    case ModelKind::SiameseCNN:
      return make_siamese_spec(arch, 39, 200);
  }
  throw std::logic_error("unreachable model kind");
}

Shape spec_input_shape(const ModelSpec& spec) { return {spec.input_dim, spec.n_pad}; }

void validate_spec(const ModelSpec& spec) {
  if (spec.input_dim < 1 || spec.n_pad < 1)
    throw std::invalid_argument("model spec: input_dim and n_pad must be >= 1");
  if (spec.layers.empty()) throw std::invalid_argument("model spec: empty layer stack");
  network_output_shape(spec.layers, spec_input_shape(spec));

  const std::size_t n = spec.layers.size();
  if (spec.kind == ModelKind::SiameseCNN) {
    if (spec.layers[n - 1].kind != LayerKind::Affine)
      throw std::invalid_argument("siamese spec must end in a linear (affine) layer");
    if (spec.bottleneck_layer)
      throw std::invalid_argument("siamese spec takes no bottleneck (size the final layer)");
  } else {
    if (n < 2 || spec.layers[n - 1].kind != LayerKind::Softmax ||
        spec.layers[n - 2].kind != LayerKind::Affine)
      throw std::invalid_argument("classifier spec must end in affine + softmax");
    if (spec.bottleneck_layer) {
      if (*spec.bottleneck_layer >= n ||
          spec.layers[*spec.bottleneck_layer].kind != LayerKind::Affine)
        throw std::invalid_argument("bottleneck_layer must index an affine layer");
    }
  }
  if (spec.kind == ModelKind::ClassifierDNN)
    for (const LayerSpec& l : spec.layers)
      if (l.kind == LayerKind::Conv1D)
        throw std::invalid_argument("classifier DNN spec cannot contain conv layers");
}

EmbeddingTap default_tap(ModelKind kind) {
  return kind == ModelKind::SiameseCNN ? EmbeddingTap::FinalLinear : EmbeddingTap::SoftmaxOutput;
}

namespace {

std::size_t tap_activation_index(const ModelSpec& spec, EmbeddingTap tap) {
  const std::size_t n = spec.layers.size();
  switch (tap) {
    case EmbeddingTap::SoftmaxOutput:
      if (spec.kind == ModelKind::SiameseCNN)
        throw std::invalid_argument("softmax tap is invalid for a siamese model");
      return n;
    case EmbeddingTap::PreSoftmaxLogits:
      if (spec.kind == ModelKind::SiameseCNN)
        throw std::invalid_argument("logit tap is invalid for a siamese model");
      return n - 1;
    case EmbeddingTap::Bottleneck:
      if (!spec.bottleneck_layer)
        throw std::invalid_argument("model spec has no bottleneck layer");
      return *spec.bottleneck_layer + 1;
    case EmbeddingTap::FinalLinear:
      if (spec.kind != ModelKind::SiameseCNN)
        throw std::invalid_argument("final-linear tap is only valid for a siamese model");
      return n;
  }
  throw std::logic_error("unreachable tap");
}

std::vector<Matrix> pad_all(const SegmentArchive& archive, const PadConfig& pad) {
  std::vector<Matrix> inputs;
  inputs.reserve(archive.size());
  for (const Segment& s : archive.segments) inputs.push_back(pad_segment(s, pad));
  return inputs;
}

// Sum of item_fn over [0, n), with gradients accumulated per chunk and
// reduced in chunk order; identical inputs and thread count give
// bit-identical sums.
double accumulate_items(std::size_t n, int threads, const NetworkParams& params,
                        GradBlocks& grads,
                        const std::function<double(std::size_t, GradBlocks&)>& item_fn) {
  const int chunks = chunk_count(n, threads);
  if (chunks == 1) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += item_fn(i, grads);
    return loss;
  }
  std::vector<GradBlocks> chunk_grads(chunks, zero_grad_blocks(params));
  std::vector<double> chunk_loss(chunks, 0.0);
  run_chunked(n, threads, [&](int w, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) chunk_loss[w] += item_fn(i, chunk_grads[w]);
  });
  double loss = 0.0;
  for (int w = 0; w < chunks; ++w) {
    loss += chunk_loss[w];
    accumulate(grads, chunk_grads[w]);
  }
  return loss;
}

double dev_average_precision(const NetworkParams& params, const ModelSpec& spec,
                             const SegmentArchive& dev, EmbeddingTap tap, const TrainConfig& config) {
  const EmbeddingSet embeddings = embed(params, spec, dev, tap, config.pad, config.threads);
  return average_precision(score_pairs_cosine(embeddings)).ap;
}

void check_train_config(const TrainConfig& config) {
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (config.patience < 1) throw std::invalid_argument("train: patience must be >= 1");
}

// Shared epoch loop: runs epoch_fn, evaluates dev AP, keeps the best
// parameters and stops after `patience` epochs without improvement.
TrainResult run_epochs(NetworkParams params, const ModelSpec& spec, const SegmentArchive& dev,
                       EmbeddingTap tap, const TrainConfig& config,
                       const std::function<double(NetworkParams&)>& epoch_fn) {
  TrainResult result;
  NetworkParams best = params;
  double best_ap = -1.0;
  std::size_t best_epoch = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double train_loss = epoch_fn(params);
    const double ap = dev_average_precision(params, spec, dev, tap, config);
    result.history.push_back({train_loss, ap});
    if (ap > best_ap) {
      best_ap = ap;
      best = params;
      best_epoch = static_cast<std::size_t>(epoch);
    } else if (static_cast<std::size_t>(epoch) - best_epoch >= static_cast<std::size_t>(config.patience)) {
      break;
    }
  }
  result.params = std::move(best);
  result.best_epoch = best_epoch;
  return result;
}

Matrix column(const Vector& v) {
  Matrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

}  // namespace

TrainResult train_classifier(const SegmentArchive& train, const SegmentArchive& dev,
                             const ModelSpec& spec, const TrainConfig& config) {
  validate_spec(spec);
  check_train_config(config);
  if (spec.kind == ModelKind::SiameseCNN)
    throw std::invalid_argument("train_classifier: spec is a siamese model");
  if (config.loss.kind != LossKind::CrossEntropy)
    throw std::invalid_argument("train_classifier: loss must be cross-entropy");
  if (train.empty()) throw std::invalid_argument("train_classifier: empty training archive");
  if (train.dim != spec.input_dim || dev.dim != spec.input_dim)
    throw std::invalid_argument("train_classifier: archive dim does not match spec input_dim");

  // Class indices follow sorted label order, as in vocab_filter.
  std::map<std::string, int> classes;
  for (const Segment& s : train.segments) classes.emplace(s.word_label, 0);
  int next = 0;
  for (auto& [label, id] : classes) id = next++;
  if (classes.size() < 2) throw std::invalid_argument("train_classifier: need >= 2 word types");
  const LayerSpec& head = spec.layers[spec.layers.size() - 2];
  if (head.out_dim != static_cast<int>(classes.size())) {
    std::ostringstream os;
    os << "train_classifier: softmax head has " << head.out_dim << " classes but training data has "
       << classes.size();
    throw std::invalid_argument(os.str());
  }

  const std::vector<Matrix> inputs = pad_all(train, config.pad);
  std::vector<Index> targets;
  targets.reserve(train.size());
  for (const Segment& s : train.segments) targets.push_back(classes.at(s.word_label));

  std::mt19937_64 rng(config.seed);
  NetworkParams params = init_network(spec.layers, spec_input_shape(spec), rng);
  AdadeltaState state = make_adadelta_state(params);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  auto epoch_fn = [&](NetworkParams& p) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, order.size() - start);
      GradBlocks grads = zero_grad_blocks(p);
      epoch_loss += accumulate_items(count, config.threads, p, grads,
                                     [&](std::size_t k, GradBlocks& acc) {
                                       const std::size_t idx = order[start + k];
                                       const ForwardTrace trace = network_forward(p, inputs[idx]);
                                       const Vector probs = trace.output().col(0);
                                       const double loss = cross_entropy_loss(probs, targets[idx]);
                                       auto [g, unused] = network_backward(
                                           p, trace, column(cross_entropy_output_grad(probs, targets[idx])));
                                       accumulate(acc, g);
                                       return loss;
                                     });
      scale_blocks(grads, 1.0 / static_cast<double>(count));
      adadelta_step(p, grads, state, config.adadelta);
    }
    return epoch_loss / static_cast<double>(order.size());
  };

  const EmbeddingTap tap =
      spec.bottleneck_layer ? EmbeddingTap::Bottleneck : EmbeddingTap::SoftmaxOutput;
  return run_epochs(std::move(params), spec, dev, tap, config, epoch_fn);
}

TrainResult train_siamese(const SegmentArchive& train, const PairSet& pairs,
                          const SegmentArchive& dev, const ModelSpec& spec,
                          const TrainConfig& config) {
  validate_spec(spec);
  check_train_config(config);
  if (spec.kind != ModelKind::SiameseCNN)
    throw std::invalid_argument("train_siamese: spec is not a siamese model");
  if (config.loss.kind == LossKind::CrossEntropy)
    throw std::invalid_argument("train_siamese: loss must be coscos2 or cos-hinge");
  if (pairs.empty()) throw std::invalid_argument("train_siamese: empty pair set");
  if (train.dim != spec.input_dim || dev.dim != spec.input_dim)
    throw std::invalid_argument("train_siamese: archive dim does not match spec input_dim");
  for (const auto& [m, n] : pairs)
    if (m >= train.size() || n >= train.size() ||
        train.segments[m].word_label != train.segments[n].word_label)
      throw std::invalid_argument("train_siamese: pair set does not match the archive");

  const std::vector<Matrix> inputs = pad_all(train, config.pad);

  std::mt19937_64 rng(config.seed);
  // Both branches share this one parameter set; gradients from every
  // branch accumulate into the same blocks.
  NetworkParams params = init_network(spec.layers, spec_input_shape(spec), rng);
  AdadeltaState state = make_adadelta_state(params);

  const bool hinge = config.loss.kind == LossKind::CosHinge;

  auto epoch_fn = [&](NetworkParams& p) {
    std::vector<Triplet> triplets = sample_triplets(pairs, train, rng);

    struct Item {
      std::size_t first, second;
      std::size_t third;  // hinge only
      bool same;          // coscos2 only
    };
    std::vector<Item> items;
    if (hinge) {
      items.reserve(triplets.size());
      for (const Triplet& t : triplets) items.push_back({t.anchor, t.same, t.different, true});
    } else {
      items.reserve(2 * triplets.size());
      for (const Triplet& t : triplets) {
        items.push_back({t.anchor, t.same, 0, true});
        items.push_back({t.anchor, t.different, 0, false});
      }
    }
    std::shuffle(items.begin(), items.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < items.size(); start += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, items.size() - start);
      GradBlocks grads = zero_grad_blocks(p);
      epoch_loss += accumulate_items(
          count, config.threads, p, grads, [&](std::size_t k, GradBlocks& acc) {
            const Item& item = items[start + k];
            const ForwardTrace t1 = network_forward(p, inputs[item.first]);
            const ForwardTrace t2 = network_forward(p, inputs[item.second]);
            const Vector e1 = t1.output().col(0);
            const Vector e2 = t2.output().col(0);
            if (hinge) {
              const ForwardTrace t3 = network_forward(p, inputs[item.third]);
              const Vector e3 = t3.output().col(0);
              const TripletGrad tg =
                  cos_hinge_loss_grad(e1, e2, e3, config.loss.margin, config.loss.distance);
              if (tg.value > 0.0) {
                accumulate(acc, network_backward(p, t1, column(tg.grad1)).first);
                accumulate(acc, network_backward(p, t2, column(tg.grad2)).first);
                accumulate(acc, network_backward(p, t3, column(tg.grad3)).first);
              }
              return tg.value;
            }
            const PairGrad pg = coscos2_loss_grad(e1, e2, item.same);
            accumulate(acc, network_backward(p, t1, column(pg.grad1)).first);
            accumulate(acc, network_backward(p, t2, column(pg.grad2)).first);
            return pg.value;
          });
      scale_blocks(grads, 1.0 / static_cast<double>(count));
      adadelta_step(p, grads, state, config.adadelta);
    }
    return epoch_loss / static_cast<double>(items.size());
  };

  return run_epochs(std::move(params), spec, dev, EmbeddingTap::FinalLinear, config, epoch_fn);
}

EmbeddingSet embed(const NetworkParams& params, const ModelSpec& spec,
                   const SegmentArchive& archive, EmbeddingTap tap, const PadConfig& pad,
                   int threads) {
  validate_spec(spec);
  if (archive.dim != spec.input_dim)
    throw std::invalid_argument("embed: archive dim does not match spec input_dim");
  const std::size_t activation = tap_activation_index(spec, tap);

  Shape s = spec_input_shape(spec);
  std::vector<Shape> shapes{s};
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    shapes.push_back(s = layer_output_shape(spec.layers[i], s, i));
  const Index dim = shapes[activation].rows * shapes[activation].cols;

  Matrix vectors(static_cast<Index>(archive.size()), dim);
  std::vector<std::string> labels(archive.size());
  run_chunked(archive.size(), threads, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Matrix input = pad_segment(archive.segments[i], pad);
      const ForwardTrace trace = network_forward(params, input);
      vectors.row(i) = flatten(trace.activations[activation]).transpose();
      labels[i] = archive.segments[i].word_label;
    }
  });
  return make_embedding_set(std::move(vectors), std::move(labels));
}

namespace {

json layer_to_json(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::Conv1D:
      return {{"type", "conv1d"}, {"filters", layer.num_filters}, {"width", layer.filter_width}};
    case LayerKind::MaxPool:
      return {{"type", "maxpool"}, {"width", layer.pool_width}};
    case LayerKind::ReLU:
      return {{"type", "relu"}};
    case LayerKind::Affine:
      return {{"type", "affine"}, {"dim", layer.out_dim}};
    case LayerKind::Softmax:
      return {{"type", "softmax"}};
  }
  throw std::logic_error("unreachable layer kind");
}

LayerSpec layer_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv1d") return LayerSpec::conv1d(j.at("filters").get<int>(), j.at("width").get<int>());
  if (type == "maxpool") return LayerSpec::maxpool(j.at("width").get<int>());
  if (type == "relu") return LayerSpec::relu();
  if (type == "affine") return LayerSpec::affine(j.at("dim").get<int>());
  if (type == "softmax") return LayerSpec::softmax();
  throw std::invalid_argument("unknown layer type \"" + type + "\"");
}

json spec_to_json(const ModelSpec& spec) {
  json j{{"kind", model_kind_name(spec.kind)},
         {"input_dim", spec.input_dim},
         {"n_pad", spec.n_pad},
         {"layers", json::array()}};
  for (const LayerSpec& l : spec.layers) j["layers"].push_back(layer_to_json(l));
  if (spec.bottleneck_layer) j["bottleneck_layer"] = *spec.bottleneck_layer;
  return j;
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.kind = model_kind_from_name(j.at("kind").get<std::string>());
  spec.input_dim = j.at("input_dim").get<Index>();
  spec.n_pad = j.at("n_pad").get<Index>();
  for (const json& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
  if (j.contains("bottleneck_layer"))
    spec.bottleneck_layer = j.at("bottleneck_layer").get<std::size_t>();
  validate_spec(spec);
  return spec;
}

constexpr char kCheckpointMagic[4] = {'A', 'W', 'E', 'C'};

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ClassifierCNN:
      return "classifier_cnn";
    case ModelKind::ClassifierDNN:
      return "classifier_dnn";
    case ModelKind::SiameseCNN:
      return "siamese_cnn";
  }
  throw std::logic_error("unreachable model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "classifier_cnn") return ModelKind::ClassifierCNN;
  if (name == "classifier_dnn") return ModelKind::ClassifierDNN;
  if (name == "siamese_cnn") return ModelKind::SiameseCNN;
  throw std::invalid_argument("unknown model kind \"" + name + "\"");
}

void save_checkpoint(const ModelSpec& spec, const NetworkParams& params, std::ostream& os) {
  validate_spec(spec);
  if (params.layers != spec.layers)
    throw std::invalid_argument("save_checkpoint: params do not match spec layers");
  const std::string header = json{{"model", spec_to_json(spec)}}.dump();
  os.write(kCheckpointMagic, 4);
  io::put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const LayerParams& block : params.blocks) {
    io::put_matrix(os, block.weight);
    io::put_vector(os, block.bias);
  }
  if (!os) throw std::runtime_error("checkpoint write failed");
}

std::pair<ModelSpec, NetworkParams> load_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw ParseError("bad checkpoint magic", 0);
  const std::uint64_t len = io::get_u64(is, "header length");
  const std::string header_str = io::get_string(is, len, "header");
  json header = json::parse(header_str, nullptr, false);
  if (header.is_discarded() || !header.contains("model"))
    throw ParseError("bad checkpoint header", 12);
  ModelSpec spec = spec_from_json(header.at("model"));

  NetworkParams params;
  params.layers = spec.layers;
  params.blocks.resize(spec.layers.size());
  Shape s = spec_input_shape(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (layer.kind == LayerKind::Conv1D) {
      params.blocks[i].weight =
          io::get_matrix(is, layer.num_filters, s.rows * layer.filter_width, "conv weight");
      params.blocks[i].bias = io::get_vector(is, layer.num_filters, "conv bias");
    } else if (layer.kind == LayerKind::Affine) {
      params.blocks[i].weight = io::get_matrix(is, layer.out_dim, s.rows * s.cols, "affine weight");
      params.blocks[i].bias = io::get_vector(is, layer.out_dim, "affine bias");
    }
    s = layer_output_shape(layer, s, i);
  }
  return {std::move(spec), std::move(params)};
}

void save_checkpoint_file(const ModelSpec& spec, const NetworkParams& params,
                          const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(spec, params, os);
}

std::pair<ModelSpec, NetworkParams> load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return load_checkpoint(is);
}

double GradCheckReport::max_err() const {
  return std::max({max_err_cross_entropy, max_err_coscos2, max_err_cos_hinge});
}

GradCheckReport run_gradient_check(std::uint64_t seed, int trials, Index input_dim, Index n_pad) {
  if (trials < 1) throw std::invalid_argument("run_gradient_check: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  GradCheckReport report;

  for (int trial = 0; trial < trials; ++trial) {
    const int filters = std::uniform_int_distribution<int>(2, 4)(rng);
    const int width = std::uniform_int_distribution<int>(2, 4)(rng);
    const int pool = std::uniform_int_distribution<int>(2, 3)(rng);
    const int emb_dim = std::uniform_int_distribution<int>(3, 6)(rng);
    const int classes = std::uniform_int_distribution<int>(3, 5)(rng);

    const std::vector<LayerSpec> stack{LayerSpec::conv1d(filters, width), LayerSpec::relu(),
                                       LayerSpec::maxpool(pool)};
    std::vector<LayerSpec> classifier = stack;
    classifier.push_back(LayerSpec::affine(classes));
    classifier.push_back(LayerSpec::softmax());
    std::vector<LayerSpec> embedder = stack;
    embedder.push_back(LayerSpec::affine(emb_dim));

    const Shape in{input_dim, n_pad};
    auto random_input = [&] {
      Matrix x(input_dim, n_pad);
      for (Index k = 0; k < x.size(); ++k) x.data()[k] = value(rng);
      return x;
    };

    {
      NetworkParams params = init_network(classifier, in, rng);
      const Matrix x = random_input();
      const Index target = std::uniform_int_distribution<Index>(0, classes - 1)(rng);
      const LossFn loss_fn = [&](const NetworkParams& p) {
        const ForwardTrace trace = network_forward(p, x);
        const Vector probs = trace.output().col(0);
        LossWithGrads out;
        out.value = cross_entropy_loss(probs, target);
        out.grads =
            network_backward(p, trace, column(cross_entropy_output_grad(probs, target))).first;
        return out;
      };
      report.max_err_cross_entropy =
          std::max(report.max_err_cross_entropy, finite_difference_check(params, loss_fn));
    }

    {
      NetworkParams params = init_network(embedder, in, rng);
      const Matrix x1 = random_input(), x2 = random_input(), x3 = random_input();
      const bool same = trial % 2 == 0;

      const LossFn coscos2_fn = [&](const NetworkParams& p) {
        const ForwardTrace t1 = network_forward(p, x1);
        const ForwardTrace t2 = network_forward(p, x2);
        const PairGrad pg = coscos2_loss_grad(t1.output().col(0), t2.output().col(0), same);
        LossWithGrads out;
        out.value = pg.value;
        out.grads = zero_grad_blocks(p);
        accumulate(out.grads, network_backward(p, t1, column(pg.grad1)).first);
        accumulate(out.grads, network_backward(p, t2, column(pg.grad2)).first);
        return out;
      };
      report.max_err_coscos2 =
          std::max(report.max_err_coscos2, finite_difference_check(params, coscos2_fn));

      const LossFn hinge_fn = [&](const NetworkParams& p) {
        const ForwardTrace t1 = network_forward(p, x1);
        const ForwardTrace t2 = network_forward(p, x2);
        const ForwardTrace t3 = network_forward(p, x3);
        const TripletGrad tg = cos_hinge_loss_grad(t1.output().col(0), t2.output().col(0),
                                                   t3.output().col(0), 0.15);
        LossWithGrads out;
        out.value = tg.value;
        out.grads = zero_grad_blocks(p);
        if (tg.value > 0.0) {
          accumulate(out.grads, network_backward(p, t1, column(tg.grad1)).first);
          accumulate(out.grads, network_backward(p, t2, column(tg.grad2)).first);
          accumulate(out.grads, network_backward(p, t3, column(tg.grad3)).first);
        }
        return out;
      };
      report.max_err_cos_hinge =
          std::max(report.max_err_cos_hinge, finite_difference_check(params, hinge_fn));
    }
  }
  return report;
}

}  // namespace awe
