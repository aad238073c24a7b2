#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "awe/data.hpp"
#include "awe/embedding.hpp"
#include "awe/losses.hpp"
#include "awe/net.hpp"
#include "awe/optim.hpp"

namespace awe {

enum class ModelKind { ClassifierCNN, ClassifierDNN, SiameseCNN };

// Where embeddings are read off a trained network.
enum class EmbeddingTap { SoftmaxOutput, PreSoftmaxLogits, Bottleneck, FinalLinear };

struct ModelSpec {
  ModelKind kind = ModelKind::ClassifierCNN;
  Index input_dim = 39;
  Index n_pad = 200;
  std::vector<LayerSpec> layers;
  // Index of the linear bottleneck layer inserted before the softmax head
  // (classifiers only).
  std::optional<std::size_t> bottleneck_layer;
};

// Layer-stack sizing knobs shared by the spec builders. The defaults are
// a desk-scale stack; build_default_spec carries the full-size stacks.
struct ArchConfig {
  std::vector<int> conv_filters{16, 16};
  std::vector<int> conv_widths{9, 8};
  std::vector<int> pool_widths{3, 3};
  std::vector<int> cnn_hidden{256};
  std::vector<int> dnn_hidden{256, 256};
  std::vector<int> siamese_hidden{256};
  int embedding_dim = 200;
};

ModelSpec make_classifier_cnn_spec(const ArchConfig& arch, Index input_dim, Index n_pad,
                                   int vocab_size, std::optional<int> bottleneck = std::nullopt);
ModelSpec make_classifier_dnn_spec(const ArchConfig& arch, Index input_dim, Index n_pad,
                                   int vocab_size, std::optional<int> bottleneck = std::nullopt);
ModelSpec make_siamese_spec(const ArchConfig& arch, Index input_dim, Index n_pad);

// The full-size architectures on 39-dim features padded to 200 frames:
// ClassifierCNN: conv 96x9, ReLU, pool 3, conv 96x8, ReLU, pool 3,
// 1024-unit ReLU, softmax head; ClassifierDNN: two 2048-unit ReLU layers
// and a softmax head; SiameseCNN: the conv stack, a 2048-unit ReLU layer
// and a 1024-unit linear output.
ModelSpec build_default_spec(ModelKind kind, int vocab_size,
                             std::optional<int> bottleneck = std::nullopt);

// Throws unless the stack composes on (input_dim, n_pad) and ends in the
// head the kind requires.
void validate_spec(const ModelSpec& spec);

Shape spec_input_shape(const ModelSpec& spec);

struct TrainConfig {
  std::uint64_t seed = 1;
  int batch_size = 100;
  int max_epochs = 50;
  int patience = 5;
  int threads = 1;
  AdadeltaConfig adadelta;
  LossConfig loss;
  PadConfig pad;
};

struct EpochStats {
  double train_loss = 0.0;
  double dev_ap = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

// Minibatch ADADELTA on mean cross-entropy; classes are the sorted
// distinct train labels and must match the softmax width. Model selection
// is by dev-set same-different AP with early stopping.
TrainResult train_classifier(const SegmentArchive& train, const SegmentArchive& dev,
                             const ModelSpec& spec, const TrainConfig& config);

// Siamese training on one shared parameter set. CosHinge consumes one
// sampled triplet per same-pair per epoch; CosCos2 consumes each
// same-pair plus one sampled different-pair.
TrainResult train_siamese(const SegmentArchive& train, const PairSet& pairs,
                          const SegmentArchive& dev, const ModelSpec& spec,
                          const TrainConfig& config);

EmbeddingTap default_tap(ModelKind kind);

EmbeddingSet embed(const NetworkParams& params, const ModelSpec& spec,
                   const SegmentArchive& archive, EmbeddingTap tap, const PadConfig& pad,
                   int threads = 1);

// Checkpoint format (little-endian): magic "AWEC"; u64 header length;
// JSON header {"model": <spec>}; then, for each parameterized layer in
// order, the weight matrix (row-major f64) followed by the bias vector.
void save_checkpoint(const ModelSpec& spec, const NetworkParams& params, std::ostream& os);
std::pair<ModelSpec, NetworkParams> load_checkpoint(std::istream& is);
void save_checkpoint_file(const ModelSpec& spec, const NetworkParams& params,
                          const std::filesystem::path& path);
std::pair<ModelSpec, NetworkParams> load_checkpoint_file(const std::filesystem::path& path);

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Gradient validation over freshly initialized small networks: for each
// trial, a conv+pool+affine stack is checked against central finite
// differences for the cross-entropy, coscos2 and cos-hinge losses.
struct GradCheckReport {
  double max_err_cross_entropy = 0.0;
  double max_err_coscos2 = 0.0;
  double max_err_cos_hinge = 0.0;

  double max_err() const;
};

GradCheckReport run_gradient_check(std::uint64_t seed, int trials, Index input_dim = 5,
                                   Index n_pad = 20);

}  // namespace awe
