#include "dare_tools/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dare/error.hpp"
#include "dare/metrics.hpp"
#include "dare/treeclf.hpp"
#include "features.hpp"
#include "json.hpp"
#include "run_manifest.hpp"

namespace dare::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path config_dir() {
  if (const char* env = std::getenv("DARE_CONFIG_DIR")) return env;
  return DARE_CONFIG_DIR;
}

// A shipped topology name (dare20, mini2) or a path.
fs::path resolve_topology(const std::string& spec) {
  if (fs::exists(spec)) return spec;
  const fs::path shipped = config_dir() / "topologies" / (spec + ".json");
  if (fs::exists(shipped)) return shipped;
  throw UsageError("topology '" + spec + "' is neither a file nor a shipped topology");
}

std::string fmt(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("--hidden expects positive integers separated by commas, got '" + text + "'");
    }
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
}

struct TrainFlags {
  std::string topology = "dare20";
  bool flat = false;
  std::string backbone = "mininet";
  std::string backbone_weights;
  std::string hidden;
  double dropout = 0.5;
  double lr = 0.001;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--topology", topology, "Topology file or shipped name")->capture_default_str();
    cmd->add_flag("--flat", flat, "Use a single flat node over all labels instead of the tree");
    cmd->add_option("--backbone", backbone, "Backbone config file or builtin name (image mode)")
        ->capture_default_str();
    cmd->add_option("--backbone-weights", backbone_weights, "Backbone weight file (default: seeded init)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--hidden", hidden, "Hidden widths, e.g. 64,64 (default: backbone head, else 4096,4096)");
    cmd->add_option("--dropout", dropout, "Hidden-layer dropout rate")->capture_default_str()->check(CLI::Range(0.0, 0.99));
    cmd->add_option("--lr", lr, "Learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--momentum", momentum, "Momentum")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
    cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", epochs, "Epochs per node")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed")->capture_default_str();
    cmd->add_option("--jobs", jobs, "Nodes trained concurrently")->capture_default_str()->check(CLI::PositiveNumber);
  }

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.momentum = momentum;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.jobs = jobs;
    return cfg;
  }

  HeadArchitecture head(const std::optional<Extractor>& ex) const {
    HeadArchitecture arch;
    arch.dropout_rate = dropout;
    if (!hidden.empty()) {
      arch.hidden = parse_widths(hidden);
    } else if (ex && !ex->config.head_hidden.empty()) {
      arch.hidden = ex->config.head_hidden;
    }
    return arch;
  }

  TreeTopology load(const std::vector<std::string>& names, RunManifest& run) const {
    if (flat) return flat_topology(names);
    const fs::path path = resolve_topology(topology);
    run.add_config("topology", path.string());
    return load_topology(path);
  }
};

struct Dataset {
  FeatureDataset features;
  std::optional<Extractor> extractor;
};

// Feature rows from a DFMV file, or from a manifest of stereo images.
Dataset load_dataset(const std::string& path, const std::string& mode, bool check_files,
                     std::optional<Extractor> extractor, std::size_t jobs) {
  Dataset d;
  if (mode == "fmv") {
    d.features = read_dfmv(path);
    return d;
  }
  const Manifest manifest = load_manifest(path, check_files);
  d.extractor = std::move(extractor);
  d.features = extract_dataset(manifest, *d.extractor, jobs);
  return d;
}

std::vector<std::string> metric_names(std::size_t n) {
  const auto names = class_names();
  if (n > names.size()) fail(ErrorCode::LabelOutOfRange, "dataset has more classes than the taxonomy");
  return {names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n)};
}

void write_loss_history(const TrainedTree& tree, const fs::path& path) {
  std::ostringstream csv;
  csv << "node,name,epoch,loss\n";
  for (const auto& [id, history] : tree.loss_history) {
    for (std::size_t e = 0; e < history.size(); ++e)
      csv << id << ',' << tree.classifier.topology().node(id).name << ',' << e + 1 << ',' << fmt(history[e]) << '\n';
  }
  write_file(path, csv.str());
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::string out;
  std::string mode = "fmv";
  std::size_t classes = kClassCount;
  std::size_t per_class = 50;
  std::size_t dim = 16;
  double margin = 4.0;
  std::optional<double> noise;
  std::size_t side = 32;
  std::uint64_t seed = 7;
};

int cmd_synth(const SynthFlags& f, RunManifest& run, std::ostream& out) {
  run.set_seed(f.seed);
  const fs::path dir = f.out;
  fs::create_directories(dir);
  if (f.mode == "fmv") {
    SynthFeatureSpec spec{f.classes, f.per_class, f.dim, f.margin, f.noise.value_or(0.4), f.seed};
    const SynthFeatures s = synth_features(spec);
    write_dfmv(s.data, dir / "features.dfmv");
    run.add_output(dir / "features.dfmv");
    out << "wrote " << s.data.size() << " feature rows to " << (dir / "features.dfmv").string() << '\n';
  } else {
    SynthImageSpec spec{f.classes, f.per_class, f.side, f.noise.value_or(0.05), f.seed};
    const Manifest m = write_image_dataset(synth_images(spec), dir);
    run.add_output(dir / "manifest.csv");
    run.add_output(dir / "images");
    out << "wrote " << m.samples.size() << " stereo pairs to " << dir.string() << '\n';
  }
  run.write(dir);
  return kOk;
}

struct TrainCmdFlags {
  std::string data, out, mode = "fmv";
  bool check_files = false;
  TrainFlags train;
};

int cmd_train(const TrainCmdFlags& f, RunManifest& run, std::ostream& out) {
  run.set_seed(f.train.seed);
  run.add_config("data", f.data);
  std::optional<Extractor> ex;
  if (f.mode == "image") {
    ex = make_extractor(f.train.backbone, f.train.backbone_weights, f.train.seed);
    run.add_config("backbone", f.train.backbone);
  }
  const Dataset data = load_dataset(f.data, f.mode, f.check_files, ex, f.train.jobs);
  const auto names = class_names();
  const TreeTopology topology = f.train.load(names, run);
  const HeadArchitecture arch = f.train.head(data.extractor);
  const TrainedTree tree = train_tree(topology, data.features, names, arch, f.train.train_config());

  const fs::path dir = f.out;
  save_tree(tree.classifier, dir);
  if (data.extractor) save_extractor(*data.extractor, dir);
  write_loss_history(tree, dir / "loss_history.csv");
  json manifest{{"tool_version", DARE_VERSION},
                {"mode", f.mode},
                {"seed", f.train.seed},
                {"data", f.data},
                {"topology", f.train.flat ? std::string("flat") : f.train.topology},
                {"train", {{"learning_rate", f.train.lr},
                           {"momentum", f.train.momentum},
                           {"batch_size", f.train.batch},
                           {"epochs", f.train.epochs}}},
                {"head", {{"hidden", arch.hidden}, {"dropout_rate", arch.dropout_rate}}}};
  if (data.extractor) manifest["backbone"] = data.extractor->config.name;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  for (const char* name : {"topology.json", "tree.json", "nodes", "manifest.json", "loss_history.csv"})
    run.add_output(dir / name);
  if (data.extractor) {
    run.add_output(dir / "backbone.json");
    run.add_output(dir / "backbone.dare");
  }
  run.write(dir);
  out << "trained " << topology.internal_count() << " nodes on " << data.features.size() << " samples; archive "
      << dir.string() << '\n';
  return kOk;
}

struct EvalFlags {
  std::string data, out, mode = "fmv", archive;
  std::size_t kfold = 0;
  std::optional<std::size_t> stub_class;
  bool check_files = false;
  TrainFlags train;
};

int cmd_eval(const EvalFlags& f, RunManifest& run, std::ostream& out) {
  if (!f.archive.empty() && f.kfold > 0) throw UsageError("--archive and --kfold are mutually exclusive");
  if (f.archive.empty() && f.kfold == 0 && !f.stub_class) {
    throw UsageError("eval needs --archive, --kfold or --stub-class");
  }
  run.set_seed(f.train.seed);
  run.add_config("data", f.data);

  std::optional<TreeClassifier> archived;
  std::optional<Extractor> ex;
  std::string mode = f.mode;
  if (!f.archive.empty()) {
    run.add_config("archive", f.archive);
    archived = load_tree(f.archive);
    if (archive_has_backbone(f.archive)) {
      ex = load_extractor(f.archive);
      mode = "image";
    }
  } else if (mode == "image") {
    ex = make_extractor(f.train.backbone, f.train.backbone_weights, f.train.seed);
    run.add_config("backbone", f.train.backbone);
  }
  const Dataset data = load_dataset(f.data, mode, f.check_files, ex, f.train.jobs);
  const std::size_t n = data.features.class_count;
  const auto names = metric_names(n);
  const auto all_names = class_names();

  const fs::path dir = f.out;
  fs::create_directories(dir);
  std::vector<std::size_t> predictions(data.features.size());
  ConfusionMatrix cm(n);
  std::ostringstream folds_csv;

  if (f.kfold > 0) {
    TrainFn trainer;
    if (f.stub_class) {
      const std::size_t c = *f.stub_class;
      trainer = [c](const FeatureDataset&, std::size_t) -> Classifier {
        return [c](std::span<const Scalar>) { return c; };
      };
    } else {
      const TreeTopology topology = f.train.load(all_names, run);
      const HeadArchitecture arch = f.train.head(data.extractor);
      const TrainConfig cfg = f.train.train_config();
      trainer = [topology, arch, cfg, &all_names](const FeatureDataset& train, std::size_t fold) -> Classifier {
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = derive_seed(cfg.seed, fold);
        auto tree = std::make_shared<TreeClassifier>(train_tree(topology, train, all_names, arch, fold_cfg).classifier);
        return [tree](std::span<const Scalar> x) { return tree->classify(x); };
      };
    }
    const CrossValidation cv = cross_validate(data.features, f.kfold, f.train.seed, trainer);
    folds_csv << "fold,size,ccr_percent,macro_f1\n";
    for (std::size_t k = 0; k < cv.folds.size(); ++k) {
      const FoldResult& fold = cv.folds[k];
      for (std::size_t j = 0; j < fold.indices.size(); ++j) predictions[fold.indices[j]] = fold.predictions[j];
      folds_csv << k << ',' << fold.indices.size() << ',' << fmt(fold.report.ccr_percent) << ','
                << fmt(fold.report.macro_f1) << '\n';
    }
    cm = cv.aggregate_matrix;
  } else {
    for (std::size_t i = 0; i < data.features.size(); ++i) {
      predictions[i] = f.stub_class ? *f.stub_class : archived->classify(data.features.row(i));
      cm.add(data.features.labels[i], predictions[i]);
    }
  }

  const MetricsReport r = report(cm);
  std::ostringstream metrics, box, preds;
  write_metrics_csv(metrics, r, names);
  write_box_csv(box, r);
  preds << "index,true,predicted\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    preds << i << ',' << all_names[data.features.labels[i]] << ',' << all_names[predictions[i]] << '\n';
  write_file(dir / "metrics.csv", metrics.str());
  write_file(dir / "box_stats.csv", box.str());
  write_file(dir / "predictions.csv", preds.str());
  run.add_output(dir / "metrics.csv");
  run.add_output(dir / "box_stats.csv");
  run.add_output(dir / "predictions.csv");
  if (f.kfold > 0) {
    write_file(dir / "folds.csv", folds_csv.str());
    run.add_output(dir / "folds.csv");
  }
  run.write(dir);
  out << "CCR " << fixed(r.ccr_percent, 2) << '\n' << "macro_F1 " << fixed(r.macro_f1, 4) << '\n';
  return kOk;
}

struct PredictFlags {
  std::string left, right, archive, out;
};

int cmd_predict(const PredictFlags& f, RunManifest& run, std::ostream& out) {
  run.add_config("archive", f.archive);
  if (!archive_has_backbone(f.archive)) {
    fail(ErrorCode::InvalidConfig, "archive " + f.archive + " has no backbone; predict needs an image-mode archive");
  }
  const Extractor ex = load_extractor(f.archive);
  const TreeClassifier tree = load_tree(f.archive);
  const Prediction p = tree.predict(pair_features(f.left, f.right, ex).values);
  std::ostringstream line;
  line << p.label_name << '\t';
  for (std::size_t k = 0; k < p.path.size(); ++k) line << (k ? ">" : "") << tree.topology().node(p.path[k]).name;
  line << '\t';
  for (std::size_t k = 0; k < p.node_probabilities.front().size(); ++k)
    line << (k ? "," : "") << fixed(p.node_probabilities.front()[k], 6);
  out << line.str() << '\n';
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_file(fs::path(f.out) / "prediction.tsv", line.str() + "\n");
    run.add_output(fs::path(f.out) / "prediction.tsv");
    run.write(f.out);
  }
  return kOk;
}

struct BenchFlags {
  std::string archive, data, out;
  std::size_t reps = 100;
};

int cmd_bench(const BenchFlags& f, RunManifest& run, std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  run.add_config("archive", f.archive);
  run.add_config("data", f.data);
  if (!archive_has_backbone(f.archive)) {
    fail(ErrorCode::InvalidConfig, "archive " + f.archive + " has no backbone; bench needs an image-mode archive");
  }
  if (f.reps < 2) err << "warning: --reps " << f.reps << " gives degenerate percentiles (median = p95)\n";
  const Extractor ex = load_extractor(f.archive);
  const TreeClassifier tree = load_tree(f.archive);
  const Manifest manifest = load_manifest(f.data);
  if (manifest.samples.empty()) fail(ErrorCode::EmptyList, "manifest " + f.data + " has no samples");

  const char* stages[] = {"decode", "resize", "extract", "route", "total"};
  std::vector<std::vector<double>> ms(5);
  auto since = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  for (std::size_t rep = 0; rep < f.reps; ++rep) {
    const StereoSample& s = manifest.samples[rep % manifest.samples.size()];
    const auto t0 = clock::now();
    const Image left = decode_image(s.left), right = decode_image(s.right);
    const auto t1 = clock::now();
    const FeatureMap3 l = resize_image(left, ex.config.input_size), r = resize_image(right, ex.config.input_size);
    const auto t2 = clock::now();
    const MultiFM fm = fuse_stereo(l, r, ex.config, ex.weights);
    const auto t3 = clock::now();
    const Prediction p = tree.predict(fm.values);
    const auto t4 = clock::now();
    ms[0].push_back(since(t0, t1));
    ms[1].push_back(since(t1, t2));
    ms[2].push_back(since(t2, t3));
    ms[3].push_back(since(t3, t4));
    ms[4].push_back(since(t0, t4));
  }
  std::ostringstream table;
  table << "stage,median_ms,p95_ms\n";
  for (std::size_t k = 0; k < 5; ++k)
    table << stages[k] << ',' << fixed(quantile(ms[k], 0.5), 4) << ',' << fixed(quantile(ms[k], 0.95), 4) << '\n';
  out << "reps " << f.reps << " (per stereo pair)\n" << table.str();
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_file(fs::path(f.out) / "bench.csv", table.str());
    run.add_output(fs::path(f.out) / "bench.csv");
    run.write(f.out);
  }
  return kOk;
}

const std::vector<std::string> kModes{"fmv", "image"};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo gesture recognition with a tree of classifier heads.\n"
               "Exit codes: 0 ok, 2 usage error, 3 domain error.",
               "dare"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(DARE_VERSION));

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--mode", synth.mode, "fmv (feature rows) or image (stereo PPM pairs)")
      ->check(CLI::IsMember(kModes))
      ->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "Class count")->check(CLI::Range(1, 20))->capture_default_str();
  synth_cmd->add_option("--per-class", synth.per_class, "Samples per class")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "Feature dimension (fmv)")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--margin", synth.margin, "Minimum centroid distance (fmv)")->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Noise level (fmv default 0.4, image default 0.05)")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--side", synth.side, "Image side (image)")->check(CLI::Range(8, 4096))->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();

  TrainCmdFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train a tree classifier and write an archive");
  train_cmd->add_option("--data", train.data, "DFMV file (fmv) or manifest CSV (image)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Archive directory")->required();
  train_cmd->add_option("--mode", train.mode, "fmv or image")->check(CLI::IsMember(kModes))->capture_default_str();
  train_cmd->add_flag("--check-files", train.check_files, "Verify every manifest image exists");
  train.train.attach(train_cmd);

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a dataset (holdout archive or k-fold) and write metric CSVs");
  eval_cmd->add_option("--data", eval.data, "DFMV file (fmv) or manifest CSV (image)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--mode", eval.mode, "fmv or image")->check(CLI::IsMember(kModes))->capture_default_str();
  eval_cmd->add_option("--archive", eval.archive, "Trained archive for holdout scoring")->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--kfold", eval.kfold, "Cross-validate with k folds");
  eval_cmd->add_option("--stub-class", eval.stub_class, "Replace the classifier by one that always predicts this class");
  eval_cmd->add_flag("--check-files", eval.check_files, "Verify every manifest image exists");
  eval.train.attach(eval_cmd);

  PredictFlags predict;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one stereo pair");
  predict_cmd->add_option("--left", predict.left, "Left image (PPM/PGM)")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--right", predict.right, "Right image (PPM/PGM)")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--archive", predict.archive, "Image-mode archive")->required()->check(CLI::ExistingDirectory);
  predict_cmd->add_option("--out", predict.out, "Optional directory for the result and run manifest");

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-stereo-pair prediction latency with a per-stage breakdown");
  bench_cmd->add_option("--archive", bench.archive, "Image-mode archive")->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--data", bench.data, "Manifest CSV of stereo pairs")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--reps", bench.reps, "Repetitions")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Optional directory for bench.csv and the run manifest");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  RunManifest run(chosen->get_name(), args);
  try {
    if (chosen == synth_cmd) return cmd_synth(synth, run, out);
    if (chosen == train_cmd) return cmd_train(train, run, out);
    if (chosen == eval_cmd) return cmd_eval(eval, run, out);
    if (chosen == predict_cmd) return cmd_predict(predict, run, out);
    return cmd_bench(bench, run, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n' << chosen->help();
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  }
}

}  // namespace dare::tools
