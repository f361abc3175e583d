#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <zlib.h>

#include "recnn/baselines.hpp"
#include "recnn/config.hpp"
#include "recnn/error.hpp"
#include "recnn/metrics.hpp"
#include "recnn/model.hpp"
#include "recnn/netpbm.hpp"
#include "recnn/synth.hpp"

namespace recnn::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::uint32_t crc32_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create output directory " + dir.string());
  }
}

// --seed beats RECNN_SEED beats the config value.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RECNN_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("RECNN_SEED is not an unsigned integer: ") + env);
  }
  return fallback;
}

class IniFile {
 public:
  explicit IniFile(const fs::path& path) : dir_(path.parent_path()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config " + path.string());
    try {
      pt::read_ini(in, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }

  ConfigSection section(const std::string& name) const {
    const auto child = tree_.get_child_optional(name);
    return ConfigSection(child ? *child : empty_, name);
  }
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : dir_ / path;
  }

 private:
  fs::path dir_;
  pt::ptree tree_;
  pt::ptree empty_;
};

ModelConfig model_config(const ConfigSection& m) {
  ModelConfig c;
  c.cell = parse_cell_type(m.get_string("cell", "lstm"));
  const std::string mode = m.get_string("mode", "binary");
  if (mode != "binary" && mode != "multiclass") {
    throw ValidationError("[model] mode: expected binary or multiclass, got " + mode);
  }
  c.mode = mode == "binary" ? TaskMode::binary : TaskMode::multiclass;
  c.patch = m.get_size("patch", c.patch);
  c.conv_channels = m.get_sizes("conv_channels", c.conv_channels);
  c.conv_dilations = m.get_sizes("conv_dilations", c.conv_dilations);
  c.kernel_radius = m.get_size("kernel_radius", c.kernel_radius);
  c.hidden = m.get_size("hidden", c.hidden);
  c.fc_hidden = m.get_size("fc_hidden", c.fc_hidden);
  c.classes = m.get_size("classes", c.classes);
  c.share_branches = m.get_bool("share_branches", c.share_branches);
  c.biases = m.get_bool("biases", c.biases);
  c.rnn_activation = parse_activation(m.get_string("rnn_activation", "tanh"));
  c.normalize_inputs = m.get_bool("normalize_inputs", c.normalize_inputs);
  return c;
}

NadamConfig optimizer_config(const ConfigSection& t) {
  NadamConfig c;
  c.learning_rate = t.get_double("lr", c.learning_rate);
  c.beta1 = t.get_double("beta1", c.beta1);
  c.beta2 = t.get_double("beta2", c.beta2);
  c.epsilon = t.get_double("epsilon", c.epsilon);
  c.schedule_decay = t.get_double("schedule_decay", c.schedule_decay);
  c.clip_norm = t.get_double("clip_norm", c.clip_norm);
  if (!(c.learning_rate > 0.0)) throw ValidationError("[train] lr must be > 0");
  if (!(c.epsilon > 0.0)) throw ValidationError("[train] epsilon must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw ValidationError("[train] beta1 and beta2 must lie in [0, 1)");
  }
  return c;
}

void write_map_and_image(const Raster& map, const fs::path& header, bool binary) {
  write_raster(map, header);
  if (binary) {
    write_pgm(map, fs::path(header).replace_extension(".pgm"));
  } else {
    write_ppm(map, fs::path(header).replace_extension(".ppm"));
  }
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const std::string spec_bytes = read_bytes(a.config);
  std::istringstream spec_in(spec_bytes);
  const SceneSpec spec = parse_scene_spec(spec_in);
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  Rng rng = Rng(seed).substream("synth");
  const Scene scene = synth_scene(spec, rng);

  const fs::path dir(a.out);
  ensure_dir(dir);
  write_raster(scene.t1, dir / "t1.hdr");
  write_raster(scene.t2, dir / "t2.hdr");
  write_raster(scene.labels, dir / "labels.hdr");

  std::size_t changed = 0;
  for (double v : scene.labels.data) changed += v != 0.0;
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", crc32_of(spec_bytes));
  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  manifest << "seed = " << seed << "\n"
           << "rng = " << Rng::kAlgorithm << "\n"
           << "spec_crc32 = " << crc << "\n"
           << "width = " << spec.width << "\n"
           << "height = " << spec.height << "\n"
           << "bands = " << spec.bands << "\n"
           << "changed_pixels = " << changed << "\n";
  if (!manifest) throw ValidationError("failed writing manifest in " + dir.string());
  out << "synth: " << spec.width << "x" << spec.height << "x" << spec.bands << ", " << changed
      << " changed pixels -> " << dir.string() << "\n";
  return kOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const IniFile ini(a.config);
  const ConfigSection data = ini.section("data");
  const ConfigSection train_cfg = ini.section("train");
  const ConfigSection output = ini.section("output");

  ModelConfig mcfg = model_config(ini.section("model"));
  Raster t1 = read_raster(ini.resolve(data.get_string("t1")));
  Raster t2 = read_raster(ini.resolve(data.get_string("t2")));
  Raster labels = read_raster(ini.resolve(data.get_string("labels")));
  if (!t1.same_geometry(t2)) throw ValidationError("T1 and T2 rasters differ in geometry");
  if (labels.width != t1.width || labels.height != t1.height) {
    throw ValidationError("label raster size differs from the image rasters");
  }
  mcfg.bands = t1.bands;
  if (mcfg.mode == TaskMode::binary) labels = binarize_labels(labels);

  const std::size_t classes = mcfg.mode == TaskMode::binary ? 2 : mcfg.classes;
  std::vector<std::size_t> counts = data.get_sizes("train_per_class", {500});
  if (counts.size() == 1) counts.assign(classes, counts[0]);
  if (counts.size() != classes) {
    throw ValidationError("[data] train_per_class: expected 1 or " + std::to_string(classes) +
                          " values");
  }

  TrainOptions options;
  options.optimizer = optimizer_config(train_cfg);
  options.batch_size = train_cfg.get_size("batch_size", 32);
  options.epochs = train_cfg.get_size("epochs", 100);
  const std::uint64_t seed = resolve_seed(a.seed, train_cfg.get_size("seed", 0));

  const Rng root(seed);
  Rng sampling = root.substream("sampling");
  Rng init = root.substream("init");
  Rng shuffle = root.substream("shuffle");

  const SampleSplit split = build_samples(labels, counts, sampling);
  if (mcfg.normalize_inputs) {
    t1 = normalize(t1);
    t2 = normalize(t2);
  }
  const auto pairs = make_patch_pairs(t1, t2, split.train, mcfg.patch);
  ReCNNModel model = ReCNNModel::create(mcfg, init);
  const auto history = train(model, pairs, options, shuffle);

  const fs::path dir = a.out.empty() ? ini.resolve(output.get_string("dir", ".")) : fs::path(a.out);
  ensure_dir(dir);
  const fs::path model_path = dir / output.get_string("model", "model.recnn");
  save_model(model, model_path);
  {
    std::ofstream log(dir / output.get_string("log", "train_log.csv"), std::ios::binary);
    log << "epoch,mean_loss,train_accuracy\n";
    for (const auto& e : history) {
      log << e.epoch << ',' << fixed6(e.mean_loss) << ',' << fixed6(e.train_accuracy) << '\n';
    }
    if (!log) throw ValidationError("failed writing training log in " + dir.string());
  }
  write_samples_csv(split.train, dir / "train_samples.csv");
  write_samples_csv(split.test, dir / "test_samples.csv");

  out << "train: " << to_string(mcfg.cell) << ", " << model.param_count() << " parameters, "
      << pairs.size() << " samples, " << history.size() << " epochs";
  if (!history.empty()) {
    out << ", final loss " << fixed6(history.back().mean_loss) << ", train accuracy "
        << fixed6(history.back().train_accuracy);
  }
  out << " -> " << model_path.string() << "\n";
  return kOk;
}

// --- predict -------------------------------------------------------------

struct PredictArgs {
  std::string model, t1, t2, out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const ReCNNModel model = load_model(a.model);
  const Raster t1 = read_raster(a.t1);
  const Raster t2 = read_raster(a.t2);
  const Raster map = predict_map(model, t1, t2);
  const fs::path header(a.out);
  if (header.has_parent_path()) ensure_dir(header.parent_path());
  write_map_and_image(map, header, model.config().mode == TaskMode::binary);
  std::size_t changed = 0;
  for (double v : map.data) changed += v != 0.0;
  out << "predict: " << map.width << "x" << map.height << ", " << changed
      << " pixels labeled non-zero -> " << header.string() << "\n";
  return kOk;
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string map, reference, samples, out;
  bool binary = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Raster map = read_raster(a.map);
  Raster ref = read_raster(a.reference);
  if (map.bands != 1 || ref.bands != 1) throw ValidationError("eval needs single-band rasters");
  if (map.width != ref.width || map.height != ref.height) {
    throw ValidationError("map is " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                          " but reference is " + std::to_string(ref.width) + "x" +
                          std::to_string(ref.height));
  }
  if (a.binary) ref = binarize_labels(ref);

  std::vector<std::size_t> pixels;
  if (a.samples.empty()) {
    for (std::size_t i = 0; i < ref.pixels(); ++i) {
      if (!(ref.nodata && ref.data[i] == *ref.nodata)) pixels.push_back(i);
    }
  } else {
    for (const auto& s : read_samples_csv(a.samples).samples) {
      if (s.row >= ref.height || s.col >= ref.width) {
        throw ValidationError("sample (" + std::to_string(s.row) + ", " + std::to_string(s.col) +
                              ") lies outside the raster");
      }
      pixels.push_back(s.row * ref.width + s.col);
    }
  }
  std::vector<std::size_t> r, p;
  std::size_t classes = 2;
  for (auto i : pixels) {
    r.push_back(static_cast<std::size_t>(ref.data[i]));
    p.push_back(static_cast<std::size_t>(map.data[i]));
    classes = std::max({classes, r.back() + 1, p.back() + 1});
  }
  ConfusionMatrix cm(classes);
  cm.accumulate(r, p);

  std::ostringstream csv;
  write_metrics_csv(csv, cm, default_class_names(classes));
  out << csv.str();
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary);
    f << csv.str();
    if (!f) throw ValidationError("failed writing " + a.out);
  }
  return kOk;
}

// --- baseline ------------------------------------------------------------

struct BaselineArgs {
  std::string method, t1, t2, out = ".";
  std::size_t components = 0;
  std::size_t max_iter = 30;
  double tol = 1e-6;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
  const Raster t1 = read_raster(a.t1);
  const Raster t2 = read_raster(a.t2);
  std::ostringstream report;
  report << "method = " << a.method << "\n";
  ChangeScore score;
  if (a.method == "cva") {
    score = cva(t1, t2);
  } else if (a.method == "pca") {
    score = pca_diff(t1, t2, a.components);
  } else if (a.method == "mad" || a.method == "irmad") {
    const MADResult r = a.method == "mad" ? mad(t1, t2) : irmad(t1, t2, a.max_iter, a.tol);
    score = r.chi_square;
    report << "iterations = " << r.iterations << "\n";
    report << "rho = ";
    for (std::size_t i = 0; i < r.rho.size(); ++i) report << (i ? "," : "") << fixed6(r.rho[i]);
    report << "\n";
    if (r.regularized) report << "regularized = true\n";
  } else {
    throw ValidationError("unknown method '" + a.method + "' (cva|pca|mad|irmad)");
  }

  const fs::path dir(a.out);
  ensure_dir(dir);
  write_raster(score, dir / "score.hdr");
  const ThresholdResult t = kmeans_threshold(score);
  write_map_and_image(t.map, dir / "map.hdr", true);
  report << "threshold = " << fixed6(t.threshold) << "\n"
         << "centers = " << fixed6(t.low_center) << "," << fixed6(t.high_center) << "\n";
  std::size_t changed = 0;
  for (double v : t.map.data) changed += v != 0.0;
  report << "changed_pixels = " << changed << "\n";
  std::ofstream f(dir / "report.txt", std::ios::binary);
  f << report.str();
  if (!f) throw ValidationError("failed writing report in " + dir.string());
  out << report.str();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bi-temporal change detection with recurrent convolutional networks", "recnn"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic bi-temporal scene");
  s->add_option("--config", synth.config, "Scene spec")->required()->check(CLI::ExistingFile);
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--seed", synth.seed, "Random seed");

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "Train a model from a run config");
  t->add_option("--config", train_args.config, "Run config")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train_args.out, "Output directory (overrides [output] dir)");
  t->add_option("--seed", train_args.seed, "Random seed (overrides [train] seed)");

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Label every pixel of an image pair");
  p->add_option("--model", predict.model)->required()->check(CLI::ExistingFile);
  p->add_option("--t1", predict.t1)->required()->check(CLI::ExistingFile);
  p->add_option("--t2", predict.t2)->required()->check(CLI::ExistingFile);
  p->add_option("--out", predict.out, "Output raster header")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Compare a map with a reference");
  e->add_option("--map", eval.map)->required()->check(CLI::ExistingFile);
  e->add_option("--reference", eval.reference)->required()->check(CLI::ExistingFile);
  e->add_option("--samples", eval.samples, "Restrict to row,col,label CSV")
      ->check(CLI::ExistingFile);
  e->add_option("--out", eval.out, "Metrics CSV");
  e->add_flag("--binary", eval.binary, "Map every non-zero reference label to 1");

  BaselineArgs base;
  auto* b = app.add_subcommand("baseline", "Unsupervised change detection");
  b->add_option("--method", base.method, "cva|pca|mad|irmad")->required();
  b->add_option("--t1", base.t1)->required()->check(CLI::ExistingFile);
  b->add_option("--t2", base.t2)->required()->check(CLI::ExistingFile);
  b->add_option("--out", base.out, "Output directory");
  b->add_option("--components", base.components, "PCA components (0 = all)");
  b->add_option("--max-iter", base.max_iter, "IRMAD iteration cap");
  b->add_option("--tol", base.tol, "IRMAD tolerance");

  std::vector<std::string> argv_store{"recnn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*t) return cmd_train(train_args, out);
    if (*p) return cmd_predict(predict, out);
    if (*e) return cmd_eval(eval, out);
    if (*b) return cmd_baseline(base, out);
  } catch (const NumericalError& ex) {
    err << "error: " << ex.what() << "\n";
    return kNumerical;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace recnn::cli
