#include "awe/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "awe/data.hpp"
#include "awe/dimred.hpp"
#include "awe/eval.hpp"
#include "awe/models.hpp"

namespace awe {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int threads = 1;
  SynthConfig synth;
  PadConfig pad;
  int batch_size = 100;
  int max_epochs = 50;
  int patience = 5;
  double rho = 0.9;
  double epsilon = 1e-6;
  double margin = 0.15;
  std::string distance = "cosine";
  ArchConfig arch;
  int bottleneck = 10;
  int vocab_min_count = 3;
  int lda_dim = 10;
  double lda_shrinkage = 1e-4;
};

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::runtime_error("config: unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

DistanceKind parse_distance(const std::string& name) {
  if (name == "cosine") return DistanceKind::Cosine;
  if (name == "euclidean") return DistanceKind::Euclidean;
  throw std::runtime_error("unknown distance \"" + name + "\" (cosine|euclidean)");
}

OverflowPolicy parse_overflow(const std::string& name) {
  if (name == "error") return OverflowPolicy::Error;
  if (name == "center-truncate") return OverflowPolicy::CenterTruncate;
  throw std::runtime_error("unknown overflow policy \"" + name + "\" (error|center-truncate)");
}

void load_config_file(const fs::path& path, RunConfig& cfg, std::string& overflow_name) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  check_keys(j,
             {"seed", "seeds", "threads", "synth", "pad", "train", "arch", "bottleneck",
              "vocab_min_count", "lda"},
             "top level");
  maybe(j, "seed", cfg.seed);
  maybe(j, "seeds", cfg.seeds);
  maybe(j, "threads", cfg.threads);
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    check_keys(s,
               {"num_types", "tokens_per_type", "dim", "duration_min", "duration_max",
                "warp_strength", "noise_sigma", "unseen_type_fraction"},
               "synth");
    maybe(s, "num_types", cfg.synth.num_types);
    maybe(s, "tokens_per_type", cfg.synth.tokens_per_type);
    maybe(s, "dim", cfg.synth.dim);
    maybe(s, "duration_min", cfg.synth.duration_min);
    maybe(s, "duration_max", cfg.synth.duration_max);
    maybe(s, "warp_strength", cfg.synth.warp_strength);
    maybe(s, "noise_sigma", cfg.synth.noise_sigma);
    maybe(s, "unseen_type_fraction", cfg.synth.unseen_type_fraction);
  }
  if (j.contains("pad")) {
    const json& p = j.at("pad");
    check_keys(p, {"n_pad", "overflow"}, "pad");
    long n_pad = cfg.pad.n_pad;
    maybe(p, "n_pad", n_pad);
    cfg.pad.n_pad = n_pad;
    maybe(p, "overflow", overflow_name);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"batch_size", "max_epochs", "patience", "rho", "epsilon", "margin", "distance"},
               "train");
    maybe(t, "batch_size", cfg.batch_size);
    maybe(t, "max_epochs", cfg.max_epochs);
    maybe(t, "patience", cfg.patience);
    maybe(t, "rho", cfg.rho);
    maybe(t, "epsilon", cfg.epsilon);
    maybe(t, "margin", cfg.margin);
    maybe(t, "distance", cfg.distance);
  }
  if (j.contains("arch")) {
    const json& a = j.at("arch");
    check_keys(a,
               {"conv_filters", "conv_widths", "pool_widths", "cnn_hidden", "dnn_hidden",
                "siamese_hidden", "embedding_dim"},
               "arch");
    maybe(a, "conv_filters", cfg.arch.conv_filters);
    maybe(a, "conv_widths", cfg.arch.conv_widths);
    maybe(a, "pool_widths", cfg.arch.pool_widths);
    maybe(a, "cnn_hidden", cfg.arch.cnn_hidden);
    maybe(a, "dnn_hidden", cfg.arch.dnn_hidden);
    maybe(a, "siamese_hidden", cfg.arch.siamese_hidden);
    maybe(a, "embedding_dim", cfg.arch.embedding_dim);
  }
  maybe(j, "bottleneck", cfg.bottleneck);
  maybe(j, "vocab_min_count", cfg.vocab_min_count);
  if (j.contains("lda")) {
    const json& l = j.at("lda");
    check_keys(l, {"dim", "shrinkage"}, "lda");
    maybe(l, "dim", cfg.lda_dim);
    maybe(l, "shrinkage", cfg.lda_shrinkage);
  }
}

TrainConfig make_train_config(const RunConfig& cfg, LossKind kind) {
  TrainConfig t;
  t.seed = cfg.seed;
  t.batch_size = cfg.batch_size;
  t.max_epochs = cfg.max_epochs;
  t.patience = cfg.patience;
  t.threads = cfg.threads;
  t.adadelta = {cfg.rho, cfg.epsilon};
  t.loss = {kind, cfg.margin, parse_distance(cfg.distance)};
  t.pad = cfg.pad;
  return t;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

void write_history_csv(const TrainResult& result, const fs::path& path) {
  std::ofstream os = open_output(path);
  os << "epoch,train_loss,dev_ap\n" << std::setprecision(17);
  for (std::size_t e = 0; e < result.history.size(); ++e)
    os << e << "," << result.history[e].train_loss << "," << result.history[e].dev_ap << "\n";
}

EmbeddingTap parse_tap(const std::string& name, const ModelSpec& spec) {
  if (name == "auto") {
    if (spec.kind == ModelKind::SiameseCNN) return EmbeddingTap::FinalLinear;
    return spec.bottleneck_layer ? EmbeddingTap::Bottleneck : EmbeddingTap::SoftmaxOutput;
  }
  if (name == "softmax") return EmbeddingTap::SoftmaxOutput;
  if (name == "logits") return EmbeddingTap::PreSoftmaxLogits;
  if (name == "bottleneck") return EmbeddingTap::Bottleneck;
  if (name == "final") return EmbeddingTap::FinalLinear;
  throw std::runtime_error("unknown tap \"" + name + "\" (auto|softmax|logits|bottleneck|final)");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// One row of a results table: test AP per seed, reduced to mean and
// sample standard deviation.
struct ResultRow {
  std::string model;
  Index dim = 0;
  std::vector<double> aps;
};

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << "model,dim,ap_mean,ap_std\n" << std::setprecision(17);
  for (const ResultRow& r : rows)
    os << r.model << "," << r.dim << "," << mean_of(r.aps) << "," << std_of(r.aps) << "\n";
}

double embedding_ap(const EmbeddingSet& embeddings) {
  return average_precision(score_pairs_cosine(embeddings)).ap;
}

// Trains every reference model for one seed and reports test AP for
// each, mirroring the structure of the published comparison: a raw DTW
// baseline, both word classifiers (plus a bottleneck variant), both
// Siamese losses, and LDA on the cos-hinge embeddings.
std::map<std::string, std::pair<Index, double>> reference_for_seed(
    const SegmentArchive& train, const SegmentArchive& dev, const SegmentArchive& test,
    const RunConfig& cfg) {
  std::map<std::string, std::pair<Index, double>> row;

  auto [classifier_train, classes] = vocab_filter(train, cfg.vocab_min_count);
  const int vocab = static_cast<int>(classes.size());

  const TrainConfig ce_config = make_train_config(cfg, LossKind::CrossEntropy);

  {
    const ModelSpec spec =
        make_classifier_dnn_spec(cfg.arch, train.dim, cfg.pad.n_pad, vocab, std::nullopt);
    const TrainResult r = train_classifier(classifier_train, dev, spec, ce_config);
    const EmbeddingSet e =
        embed(r.params, spec, test, EmbeddingTap::SoftmaxOutput, cfg.pad, cfg.threads);
    row["classifier-dnn"] = {e.dim, embedding_ap(e)};
  }
  {
    const ModelSpec spec =
        make_classifier_cnn_spec(cfg.arch, train.dim, cfg.pad.n_pad, vocab, std::nullopt);
    const TrainResult r = train_classifier(classifier_train, dev, spec, ce_config);
    const EmbeddingSet e =
        embed(r.params, spec, test, EmbeddingTap::SoftmaxOutput, cfg.pad, cfg.threads);
    row["classifier-cnn"] = {e.dim, embedding_ap(e)};
  }
  {
    const ModelSpec spec =
        make_classifier_cnn_spec(cfg.arch, train.dim, cfg.pad.n_pad, vocab, cfg.bottleneck);
    const TrainResult r = train_classifier(classifier_train, dev, spec, ce_config);
    const EmbeddingSet e =
        embed(r.params, spec, test, EmbeddingTap::Bottleneck, cfg.pad, cfg.threads);
    row["classifier-cnn-bottleneck"] = {e.dim, embedding_ap(e)};
  }

  const PairSet pairs = extract_same_pairs(train);
  const ModelSpec siamese_spec = make_siamese_spec(cfg.arch, train.dim, cfg.pad.n_pad);
  {
    const TrainConfig config = make_train_config(cfg, LossKind::CosCos2);
    const TrainResult r = train_siamese(train, pairs, dev, siamese_spec, config);
    const EmbeddingSet e =
        embed(r.params, siamese_spec, test, EmbeddingTap::FinalLinear, cfg.pad, cfg.threads);
    row["siamese-coscos2"] = {e.dim, embedding_ap(e)};
  }
  {
    const TrainConfig config = make_train_config(cfg, LossKind::CosHinge);
    const TrainResult r = train_siamese(train, pairs, dev, siamese_spec, config);
    const EmbeddingSet e =
        embed(r.params, siamese_spec, test, EmbeddingTap::FinalLinear, cfg.pad, cfg.threads);
    row["siamese-coshinge"] = {e.dim, embedding_ap(e)};

    const EmbeddingSet train_e =
        embed(r.params, siamese_spec, train, EmbeddingTap::FinalLinear, cfg.pad, cfg.threads);
    const LdaModel lda = lda_fit(train_e, cfg.lda_dim, cfg.lda_shrinkage);
    const EmbeddingSet test_lda = lda_transform(lda, e);
    row["siamese-coshinge-lda"] = {test_lda.dim, embedding_ap(test_lda)};
  }
  return row;
}

int cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  const SynthSplits splits = synth_generate(cfg.synth, cfg.seed);
  fs::create_directories(out_dir);
  write_archive_file(splits.train, out_dir / "train.awe");
  write_archive_file(splits.dev, out_dir / "dev.awe");
  write_archive_file(splits.test, out_dir / "test.awe");
  std::cout << "wrote " << splits.train.size() << "/" << splits.dev.size() << "/"
            << splits.test.size() << " train/dev/test segments to " << out_dir.string() << "\n";
  return 0;
}

int cmd_reference(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_csv) {
  const SegmentArchive train = cmvn_normalize(read_archive_file(data_dir / "train.awe"));
  const SegmentArchive dev = cmvn_normalize(read_archive_file(data_dir / "dev.awe"));
  const SegmentArchive test = cmvn_normalize(read_archive_file(data_dir / "test.awe"));

  std::vector<ResultRow> rows{{"dtw", train.dim, {}},
                              {"classifier-dnn", 0, {}},
                              {"classifier-cnn", 0, {}},
                              {"classifier-cnn-bottleneck", 0, {}},
                              {"siamese-coscos2", 0, {}},
                              {"siamese-coshinge", 0, {}},
                              {"siamese-coshinge-lda", 0, {}}};

  const double dtw_ap = average_precision(score_pairs_dtw(test, cfg.threads)).ap;
  std::cerr << "[reference] dtw test_ap=" << dtw_ap << "\n";
  for (std::uint64_t seed : cfg.seeds) rows[0].aps.push_back(dtw_ap);

  for (std::uint64_t seed : cfg.seeds) {
    RunConfig seeded = cfg;
    seeded.seed = seed;
    const auto row = reference_for_seed(train, dev, test, seeded);
    for (ResultRow& r : rows) {
      if (r.model == "dtw") continue;
      const auto& [dim, ap] = row.at(r.model);
      r.dim = dim;
      r.aps.push_back(ap);
      std::cerr << "[reference] seed " << seed << " " << r.model << " test_ap=" << ap << "\n";
    }
  }

  std::ofstream os = open_output(out_csv);
  write_results_csv(rows, os);
  write_results_csv(rows, std::cout);
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& data_dir, const std::vector<int>& dims,
              const std::vector<std::string>& models, const std::string& eval_set,
              const fs::path& out_csv) {
  const SegmentArchive train = cmvn_normalize(read_archive_file(data_dir / "train.awe"));
  const SegmentArchive dev = cmvn_normalize(read_archive_file(data_dir / "dev.awe"));
  const SegmentArchive* target = &dev;
  SegmentArchive test;
  if (eval_set == "test") {
    test = cmvn_normalize(read_archive_file(data_dir / "test.awe"));
    target = &test;
  } else if (eval_set != "dev") {
    throw std::runtime_error("unknown eval set \"" + eval_set + "\" (dev|test)");
  }

  std::vector<ResultRow> rows;
  for (const std::string& model : models) {
    for (int dim : dims) {
      ResultRow row{model, dim, {}};
      for (std::uint64_t seed : cfg.seeds) {
        RunConfig seeded = cfg;
        seeded.seed = seed;
        double ap = 0.0;
        if (model == "siamese-coshinge" || model == "siamese-coscos2") {
          ArchConfig arch = cfg.arch;
          arch.embedding_dim = dim;
          const ModelSpec spec = make_siamese_spec(arch, train.dim, cfg.pad.n_pad);
          const LossKind kind =
              model == "siamese-coshinge" ? LossKind::CosHinge : LossKind::CosCos2;
          const TrainResult r = train_siamese(train, extract_same_pairs(train), dev, spec,
                                              make_train_config(seeded, kind));
          ap = embedding_ap(
              embed(r.params, spec, *target, EmbeddingTap::FinalLinear, cfg.pad, cfg.threads));
        } else if (model == "classifier-bottleneck") {
          auto [classifier_train, classes] = vocab_filter(train, cfg.vocab_min_count);
          const ModelSpec spec = make_classifier_cnn_spec(
              cfg.arch, train.dim, cfg.pad.n_pad, static_cast<int>(classes.size()), dim);
          const TrainResult r = train_classifier(classifier_train, dev, spec,
                                                 make_train_config(seeded, LossKind::CrossEntropy));
          ap = embedding_ap(
              embed(r.params, spec, *target, EmbeddingTap::Bottleneck, cfg.pad, cfg.threads));
        } else {
          throw std::runtime_error(
              "unknown sweep model \"" + model +
              "\" (siamese-coshinge|siamese-coscos2|classifier-bottleneck)");
        }
        row.aps.push_back(ap);
        std::cerr << "[sweep] " << model << " dim=" << dim << " seed=" << seed << " ap=" << ap
                  << "\n";
      }
      rows.push_back(std::move(row));
    }
  }

  std::ofstream os = open_output(out_csv);
  write_results_csv(rows, os);
  write_results_csv(rows, std::cout);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string overflow_name = "error";

  try {
    // The config file loads before flag parsing so that flags win.
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        load_config_file(argv[i + 1], cfg, overflow_name);
      } else if (arg.rfind("--config=", 0) == 0) {
        load_config_file(arg.substr(9), cfg, overflow_name);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Acoustic word embeddings: training, evaluation and baselines"};
  app.require_subcommand(1);
  std::string config_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    cmd->add_option("--threads", cfg.threads, "worker threads for batch gradients and scoring");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic train/dev/test archives");
  fs::path synth_out;
  add_common(synth);
  synth->add_option("--seed", cfg.seed, "corpus seed");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--num-types", cfg.synth.num_types, "word types");
  synth->add_option("--tokens-per-type", cfg.synth.tokens_per_type, "tokens per type");
  synth->add_option("--dim", cfg.synth.dim, "feature dimension");
  synth->add_option("--duration-min", cfg.synth.duration_min, "min duration (frames)");
  synth->add_option("--duration-max", cfg.synth.duration_max, "max duration (frames)");
  synth->add_option("--warp", cfg.synth.warp_strength, "time warp strength");
  synth->add_option("--noise", cfg.synth.noise_sigma, "additive noise sigma");
  synth->add_option("--unseen", cfg.synth.unseen_type_fraction,
                    "fraction of types absent from training");

  // cmvn
  auto* cmvn = app.add_subcommand("cmvn", "per-group mean/variance normalization");
  fs::path cmvn_in, cmvn_out;
  cmvn->add_option("--in", cmvn_in, "input archive")->required();
  cmvn->add_option("--out", cmvn_out, "output archive")->required();

  // pairs
  auto* pairs_cmd = app.add_subcommand("pairs", "list same-type segment index pairs");
  fs::path pairs_in, pairs_out;
  pairs_cmd->add_option("--in", pairs_in, "input archive")->required();
  pairs_cmd->add_option("--out", pairs_out, "output CSV (m,n)")->required();

  // train-classifier
  auto* tc = app.add_subcommand("train-classifier", "train a word classifier (CNN or DNN)");
  fs::path tc_train, tc_dev, tc_out, tc_history;
  std::string tc_kind = "cnn";
  int tc_bottleneck = 0;
  add_common(tc);
  tc->add_option("--train", tc_train, "training archive (CMVN applied)")->required();
  tc->add_option("--dev", tc_dev, "development archive (CMVN applied)")->required();
  tc->add_option("--out", tc_out, "checkpoint path")->required();
  tc->add_option("--kind", tc_kind, "cnn|dnn");
  tc->add_option("--bottleneck", tc_bottleneck, "linear bottleneck width (0 = none)");
  tc->add_option("--min-count", cfg.vocab_min_count, "vocabulary min token count");
  tc->add_option("--seed", cfg.seed, "training seed");
  tc->add_option("--batch-size", cfg.batch_size, "minibatch size");
  tc->add_option("--epochs", cfg.max_epochs, "max epochs");
  tc->add_option("--patience", cfg.patience, "early-stop patience (epochs)");
  tc->add_option("--n-pad", cfg.pad.n_pad, "padded width in frames");
  tc->add_option("--history", tc_history, "optional per-epoch CSV");

  // train-siamese
  auto* ts = app.add_subcommand("train-siamese", "train a siamese CNN on same-type pairs");
  fs::path ts_train, ts_dev, ts_out, ts_history;
  std::string ts_loss = "coshinge";
  add_common(ts);
  ts->add_option("--train", ts_train, "training archive (CMVN applied)")->required();
  ts->add_option("--dev", ts_dev, "development archive (CMVN applied)")->required();
  ts->add_option("--out", ts_out, "checkpoint path")->required();
  ts->add_option("--loss", ts_loss, "coshinge|coscos2");
  ts->add_option("--margin", cfg.margin, "hinge margin");
  ts->add_option("--distance", cfg.distance, "cosine|euclidean");
  ts->add_option("--embedding-dim", cfg.arch.embedding_dim, "final linear width");
  ts->add_option("--seed", cfg.seed, "training seed");
  ts->add_option("--batch-size", cfg.batch_size, "minibatch size");
  ts->add_option("--epochs", cfg.max_epochs, "max epochs");
  ts->add_option("--patience", cfg.patience, "early-stop patience (epochs)");
  ts->add_option("--n-pad", cfg.pad.n_pad, "padded width in frames");
  ts->add_option("--history", ts_history, "optional per-epoch CSV");

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "extract embeddings with a trained model");
  fs::path em_model, em_in, em_out;
  std::string em_tap = "auto";
  add_common(embed_cmd);
  embed_cmd->add_option("--model", em_model, "checkpoint path")->required();
  embed_cmd->add_option("--in", em_in, "input archive")->required();
  embed_cmd->add_option("--out", em_out, "output embedding file")->required();
  embed_cmd->add_option("--tap", em_tap, "auto|softmax|logits|bottleneck|final");
  embed_cmd->add_option("--overflow", overflow_name, "error|center-truncate");

  // lda-fit / lda-apply
  auto* lf = app.add_subcommand("lda-fit", "fit LDA on labelled embeddings");
  fs::path lf_in, lf_out;
  lf->add_option("--embeddings", lf_in, "training embeddings")->required();
  lf->add_option("--out", lf_out, "LDA model path")->required();
  lf->add_option("--dim", cfg.lda_dim, "target dimensionality");
  lf->add_option("--shrinkage", cfg.lda_shrinkage, "within-class scatter shrinkage");
  lf->add_option("--config", config_path, "JSON config file (flags override it)");

  auto* la = app.add_subcommand("lda-apply", "project embeddings with a fitted LDA model");
  fs::path la_model, la_in, la_out;
  la->add_option("--lda", la_model, "LDA model path")->required();
  la->add_option("--in", la_in, "input embeddings")->required();
  la->add_option("--out", la_out, "output embeddings")->required();

  // eval-ap
  auto* ea = app.add_subcommand("eval-ap", "same-different evaluation of embeddings");
  fs::path ea_in, ea_csv, ea_dump;
  add_common(ea);
  ea->add_option("--embeddings", ea_in, "embedding file")->required();
  ea->add_option("--csv", ea_csv, "optional precision-recall CSV");
  ea->add_option("--dump", ea_dump, "optional binary pair-distance dump");
  ea->add_option("--distance", cfg.distance, "cosine|euclidean");

  // eval-dtw
  auto* ed = app.add_subcommand("eval-dtw", "same-different evaluation with frame-level DTW");
  fs::path ed_in, ed_csv, ed_dump;
  add_common(ed);
  ed->add_option("--archive", ed_in, "segment archive (CMVN applied)")->required();
  ed->add_option("--csv", ed_csv, "optional precision-recall CSV");
  ed->add_option("--dump", ed_dump, "optional binary pair-distance dump");

  // sweep-dim
  auto* sw = app.add_subcommand("sweep-dim", "AP versus target dimensionality");
  fs::path sw_data, sw_out;
  std::vector<int> sw_dims{10, 50, 200, 500};
  std::vector<std::string> sw_models{"siamese-coshinge"};
  std::string sw_set = "dev";
  add_common(sw);
  sw->add_option("--data", sw_data, "directory with train.awe/dev.awe[/test.awe]")->required();
  sw->add_option("--out", sw_out, "output CSV")->required();
  sw->add_option("--dims", sw_dims, "target dimensionalities")->delimiter(',');
  sw->add_option("--models", sw_models,
                 "siamese-coshinge|siamese-coscos2|classifier-bottleneck")
      ->delimiter(',');
  sw->add_option("--seeds", cfg.seeds, "seed list")->delimiter(',');
  sw->add_option("--set", sw_set, "dev|test");
  sw->add_option("--batch-size", cfg.batch_size, "minibatch size");
  sw->add_option("--epochs", cfg.max_epochs, "max epochs");
  sw->add_option("--patience", cfg.patience, "early-stop patience (epochs)");
  sw->add_option("--n-pad", cfg.pad.n_pad, "padded width in frames");

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient validation");
  int gc_trials = 20;
  long gc_dim = 5, gc_pad = 20;
  double gc_tol = 1e-6;
  gc->add_option("--seed", cfg.seed, "base seed");
  gc->add_option("--trials", gc_trials, "number of random networks");
  gc->add_option("--input-dim", gc_dim, "feature dimension");
  gc->add_option("--n-pad", gc_pad, "padded width");
  gc->add_option("--tol", gc_tol, "max allowed relative error");

  // reference
  auto* ref = app.add_subcommand("reference", "train and evaluate the full model comparison");
  fs::path ref_data, ref_out;
  add_common(ref);
  ref->add_option("--data", ref_data, "directory with train.awe/dev.awe/test.awe")->required();
  ref->add_option("--out", ref_out, "output CSV")->required();
  ref->add_option("--seeds", cfg.seeds, "seed list")->delimiter(',');
  ref->add_option("--batch-size", cfg.batch_size, "minibatch size");
  ref->add_option("--epochs", cfg.max_epochs, "max epochs");
  ref->add_option("--patience", cfg.patience, "early-stop patience (epochs)");
  ref->add_option("--n-pad", cfg.pad.n_pad, "padded width in frames");
  ref->add_option("--bottleneck", cfg.bottleneck, "classifier bottleneck width");
  ref->add_option("--lda-dim", cfg.lda_dim, "LDA target dimensionality");
  ref->add_option("--embedding-dim", cfg.arch.embedding_dim, "siamese final linear width");
  ref->add_option("--min-count", cfg.vocab_min_count, "vocabulary min token count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    cfg.pad.policy = parse_overflow(overflow_name);

    if (synth->parsed()) return cmd_synth(cfg, synth_out);

    if (cmvn->parsed()) {
      write_archive_file(cmvn_normalize(read_archive_file(cmvn_in)), cmvn_out);
      return 0;
    }

    if (pairs_cmd->parsed()) {
      const SegmentArchive archive = read_archive_file(pairs_in);
      const PairSet pairs = extract_same_pairs(archive);
      std::ofstream os = open_output(pairs_out);
      os << "m,n\n";
      for (const auto& [m, n] : pairs) os << m << "," << n << "\n";
      std::cout << "wrote " << pairs.size() << " pairs\n";
      return 0;
    }

    if (tc->parsed()) {
      const SegmentArchive dev = read_archive_file(tc_dev);
      auto [train, classes] = vocab_filter(read_archive_file(tc_train), cfg.vocab_min_count);
      std::optional<int> bottleneck;
      if (tc_bottleneck > 0) bottleneck = tc_bottleneck;
      ModelSpec spec;
      if (tc_kind == "cnn")
        spec = make_classifier_cnn_spec(cfg.arch, train.dim, cfg.pad.n_pad,
                                        static_cast<int>(classes.size()), bottleneck);
      else if (tc_kind == "dnn")
        spec = make_classifier_dnn_spec(cfg.arch, train.dim, cfg.pad.n_pad,
                                        static_cast<int>(classes.size()), bottleneck);
      else
        throw std::runtime_error("unknown classifier kind \"" + tc_kind + "\" (cnn|dnn)");
      const TrainResult result =
          train_classifier(train, dev, spec, make_train_config(cfg, LossKind::CrossEntropy));
      save_checkpoint_file(spec, result.params, tc_out);
      if (!tc_history.empty()) write_history_csv(result, tc_history);
      std::cout << "best epoch " << result.best_epoch << " dev_ap="
                << std::setprecision(17) << result.history[result.best_epoch].dev_ap << "\n";
      return 0;
    }

    if (ts->parsed()) {
      const SegmentArchive train = read_archive_file(ts_train);
      const SegmentArchive dev = read_archive_file(ts_dev);
      LossKind kind;
      if (ts_loss == "coshinge")
        kind = LossKind::CosHinge;
      else if (ts_loss == "coscos2")
        kind = LossKind::CosCos2;
      else
        throw std::runtime_error("unknown loss \"" + ts_loss + "\" (coshinge|coscos2)");
      const ModelSpec spec = make_siamese_spec(cfg.arch, train.dim, cfg.pad.n_pad);
      const TrainResult result = train_siamese(train, extract_same_pairs(train), dev, spec,
                                               make_train_config(cfg, kind));
      save_checkpoint_file(spec, result.params, ts_out);
      if (!ts_history.empty()) write_history_csv(result, ts_history);
      std::cout << "best epoch " << result.best_epoch << " dev_ap="
                << std::setprecision(17) << result.history[result.best_epoch].dev_ap << "\n";
      return 0;
    }

    if (embed_cmd->parsed()) {
      const auto [spec, params] = load_checkpoint_file(em_model);
      const SegmentArchive archive = read_archive_file(em_in);
      PadConfig pad{spec.n_pad, cfg.pad.policy};
      const EmbeddingSet embeddings =
          embed(params, spec, archive, parse_tap(em_tap, spec), pad, cfg.threads);
      write_embeddings_file(embeddings, em_out);
      std::cout << "wrote " << embeddings.size() << " embeddings of dim " << embeddings.dim
                << "\n";
      return 0;
    }

    if (lf->parsed()) {
      const EmbeddingSet embeddings = read_embeddings_file(lf_in);
      write_lda_file(lda_fit(embeddings, cfg.lda_dim, cfg.lda_shrinkage), lf_out);
      return 0;
    }

    if (la->parsed()) {
      const LdaModel model = read_lda_file(la_model);
      write_embeddings_file(lda_transform(model, read_embeddings_file(la_in)), la_out);
      return 0;
    }

    if (ea->parsed()) {
      ReportOptions options;
      options.distance = parse_distance(cfg.distance);
      if (!ea_csv.empty()) options.pr_csv = ea_csv;
      if (!ea_dump.empty()) options.pair_dump = ea_dump;
      same_different_report(read_embeddings_file(ea_in), options, std::cout);
      return 0;
    }

    if (ed->parsed()) {
      ReportOptions options;
      options.threads = cfg.threads;
      if (!ed_csv.empty()) options.pr_csv = ed_csv;
      if (!ed_dump.empty()) options.pair_dump = ed_dump;
      same_different_report_dtw(read_archive_file(ed_in), options, std::cout);
      return 0;
    }

    if (sw->parsed()) return cmd_sweep(cfg, sw_data, sw_dims, sw_models, sw_set, sw_out);

    if (gc->parsed()) {
      const GradCheckReport report = run_gradient_check(cfg.seed, gc_trials, gc_dim, gc_pad);
      std::cout << std::setprecision(17) << "cross_entropy max_rel_err="
                << report.max_err_cross_entropy << "\ncoscos2 max_rel_err="
                << report.max_err_coscos2 << "\ncos_hinge max_rel_err="
                << report.max_err_cos_hinge << "\n";
      if (report.max_err() > gc_tol) {
        std::cerr << "error: max relative error " << report.max_err() << " exceeds tolerance "
                  << gc_tol << "\n";
        return 1;
      }
      return 0;
    }

    if (ref->parsed()) return cmd_reference(cfg, ref_data, ref_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cli_dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("awe");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace awe
