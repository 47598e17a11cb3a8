#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ora/baselines.hpp"
#include "ora/cli.hpp"
#include "ora/ensemble.hpp"
#include "ora/error.hpp"
#include "ora/feature_store.hpp"
#include "ora/geometry.hpp"
#include "ora/metrics.hpp"
#include "ora/shaping.hpp"
#include "ora/synthbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ora::cli {
namespace {

constexpr const char* kCalibrationFile = "calibration.json";

// ---------------------------------------------------------------------------
// Options

struct HeadArgs {
  std::string weights;
  std::string bias;
  std::string mode = "affine";

  void add_to(CLI::App& app, bool required) {
    auto* w = app.add_option("--weights", weights, "classifier weights tensor (C x D)");
    if (required) w->required();
    app.add_option("--bias", bias, "classifier bias tensor (C)");
    app.add_option("--head-mode", mode, "affine or similarity")
        ->check(CLI::IsMember({"affine", "similarity"}));
  }
  bool given() const { return !weights.empty(); }
  LinearHead load() const {
    std::optional<fs::path> b;
    if (!bias.empty()) b = bias;
    return load_head(weights, b, mode == "similarity" ? HeadMode::similarity : HeadMode::affine);
  }
};

struct ShapeArgs {
  std::string method = "none";
  std::optional<double> percentile;

  void add_to(CLI::App& app) {
    app.add_option("--shape", method, "activation shaping: none, react, ash, scale")
        ->check(CLI::IsMember({"none", "react", "ash", "ash_s", "scale"}));
    app.add_option("--shape-percentile", percentile,
                   "shaping percentile (defaults: react 80, ash 35, scale 90)")
        ->check(CLI::Range(0.0, 100.0));
  }
  ShapingConfig config() const {
    auto cfg = ShapingConfig::with_defaults(parse_shape_method(method));
    if (percentile) cfg.percentile = *percentile;
    return cfg;
  }
};

struct SynthArgs {
  synth::WorldSpec spec;
  std::string out;
};

struct CalibrateArgs {
  std::string id_train;
  std::string labels;
  HeadArgs head;
  std::string centering = "global_mean";
  std::size_t class_index = 0;
  ShapeArgs shape;
  std::size_t knn_k = kDefaultKnnK;
  bool keep_unshaped_center = false;
  std::string out;
};

struct ScoreArgs {
  std::string method = "ora";
  std::string features;
  std::string calibration;
  HeadArgs head;
  std::string agg = "max";
  ShapeArgs shape;
  std::optional<std::size_t> knn_k;
  std::string out;
};

struct EvaluateArgs {
  std::string id;
  std::string ood;
  double tpr = 0.95;
  std::string method;
  std::string id_name;
  std::string ood_name;
  std::string out;
};

struct EnsembleArgs {
  std::vector<std::string> id;
  std::vector<std::string> ood;
  std::vector<std::string> names;
  std::string normalize = "none";
  double tpr = 0.95;
  std::string out;
};

struct DiagnoseArgs {
  std::string id_features;
  std::string ood_features;
  std::string calibration;
  HeadArgs head;
  std::string agg = "max";
  std::size_t bins = 64;
  double tpr = 0.95;
  std::string out;
};

// ---------------------------------------------------------------------------
// Helpers

std::optional<json> read_json_if_exists(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_header, p.string() + ": " + e.what());
  }
}

json read_json(const fs::path& p) {
  auto j = read_json_if_exists(p);
  if (!j) throw Error(Errc::io_failure, "cannot read " + p.string());
  return *j;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw Error(Errc::io_failure, "write failed: " + p.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<double> read_vector(const fs::path& p) { return to_vector(read_tensor(p)); }

void write_vector(std::span<const double> v, const fs::path& p) { write_tensor(make_tensor(v), p); }

json input_entry(const fs::path& p) {
  return json{{"path", p.generic_string()}, {"blob", git_blob_hash(p)}};
}

void fail_on_row_errors(const BatchScores& b, const std::string& what) {
  if (b.errors.empty()) return;
  std::ostringstream os;
  os << what << ": " << b.errors.size() << " row(s) could not be scored; first rows:";
  for (std::size_t i = 0; i < std::min<std::size_t>(b.errors.size(), 10); ++i) {
    os << ' ' << b.errors[i].row << " (" << to_string(b.errors[i].code) << ')';
  }
  throw Error(b.errors.front().code, os.str());
}

/// Loaded calibration directory.
struct Calibration {
  fs::path dir;
  json meta;
  ShapingConfig shaping;
  Centering centering;
  std::vector<double> mu_id;

  std::vector<fs::path> files_used;

  static Calibration load(const fs::path& dir) {
    Calibration c;
    c.dir = dir;
    c.meta = read_json(dir / kCalibrationFile);
    c.files_used.push_back(dir / kCalibrationFile);
    try {
      c.shaping.method = parse_shape_method(c.meta.at("shape").get<std::string>());
      c.shaping.percentile = c.meta.at("shape_percentile").get<double>();
      const auto& files = c.meta.at("files");
      if (files.contains("react_clamp")) {
        const auto p = dir / files.at("react_clamp").get<std::string>();
        const auto v = read_vector(p);
        if (v.size() != 1) throw Error(Errc::shape_mismatch, "react clamp must hold one value");
        c.shaping.react_clamp = v[0];
        c.files_used.push_back(p);
      }
      c.centering.strategy = parse_centering(c.meta.at("centering").get<std::string>());
      c.centering.class_index = c.meta.value("class_index", std::size_t{0});
      if (c.centering.strategy == CenteringStrategy::predicted_class_mean) {
        const auto p = dir / files.at("class_means").get<std::string>();
        c.centering.class_means = to_matrix(read_tensor(p));
        c.files_used.push_back(p);
      } else {
        const auto p = dir / files.at("centering").get<std::string>();
        c.centering.vector = read_vector(p);
        c.files_used.push_back(p);
      }
      const auto mu = dir / files.at("mu_id").get<std::string>();
      c.mu_id = read_vector(mu);
      c.files_used.push_back(mu);
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_header, (dir / kCalibrationFile).string() + ": " + e.what());
    }
    return c;
  }

  KnnIndex knn(std::optional<std::size_t> k_override) {
    const auto p = dir / meta.at("files").at("knn_bank").get<std::string>();
    files_used.push_back(p);
    const std::size_t k = k_override.value_or(meta.value("knn_k", kDefaultKnnK));
    return KnnIndex::from_normalized(to_matrix(read_tensor(p)), k);
  }
};

// Fills unset flags from a JSON config file given as --config. Flags on the
// command line always win.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path) return args;

  const json cfg = read_json(*config_path);
  if (!cfg.is_object()) throw Error(Errc::usage, "config file must hold a JSON object");
  const auto present = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  const auto scalar = [](const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (present(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      args.push_back(flag);
      for (const auto& v : value) args.push_back(scalar(v));
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto world = synth::generate_world(a.spec);
  const fs::path dir = a.out;
  ensure_dir(dir);
  const auto labels_tensor = [](const std::vector<std::size_t>& labels) {
    std::vector<double> v(labels.begin(), labels.end());
    return make_tensor(v);
  };
  write_tensor(make_tensor(world.id_train.data), dir / "id_train.oraf");
  write_tensor(labels_tensor(world.train_labels), dir / "id_train_labels.oraf");
  write_tensor(make_tensor(world.id_test.data), dir / "id_test.oraf");
  write_tensor(labels_tensor(world.test_labels), dir / "id_test_labels.oraf");
  write_tensor(make_tensor(world.ood.data), dir / "ood.oraf");
  write_tensor(make_tensor(world.head.weights()), dir / "weights.oraf");
  write_tensor(make_tensor(world.head.bias()), dir / "bias.oraf");
  json spec = synth::to_json(world.spec);
  write_text(dir / "world.json", spec.dump(2) + "\n");
  out << json{{"out", dir.generic_string()}, {"spec", spec}}.dump(2) << '\n';
}

void cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const fs::path dir = a.out;
  ensure_dir(dir);
  const FeatureMatrix x_id = load_features(a.id_train);
  const auto strategy = parse_centering(a.centering);

  std::optional<std::vector<std::size_t>> labels;
  if (!a.labels.empty()) {
    labels = load_labels(a.labels);
    if (labels->size() != x_id.size()) {
      throw Error(Errc::length_mismatch, "labels length " + std::to_string(labels->size()) +
                                             " does not match " + std::to_string(x_id.size()) +
                                             " ID rows");
    }
  }
  std::optional<LinearHead> head;
  if (a.head.given()) head = a.head.load();

  const auto cal = calibrate_shaped(x_id, a.shape.config(), strategy,
                                    labels ? &*labels : nullptr, head ? &*head : nullptr,
                                    a.class_index, !a.keep_unshaped_center);
  const FeatureMatrix shaped = shape_features(x_id, cal.config);

  json files = json::object();
  if (strategy == CenteringStrategy::predicted_class_mean) {
    write_tensor(make_tensor(cal.centering.class_means), dir / "class_means.oraf");
    files["class_means"] = "class_means.oraf";
  } else {
    write_vector(cal.centering.vector, dir / "centering.oraf");
    files["centering"] = "centering.oraf";
  }
  const auto mu =
      compute_centering(a.keep_unshaped_center ? x_id : shaped, CenteringStrategy::global_mean);
  write_vector(mu.vector, dir / "mu_id.oraf");
  files["mu_id"] = "mu_id.oraf";
  if (cal.config.react_clamp) {
    const std::vector<double> c{*cal.config.react_clamp};
    write_vector(c, dir / "react_clamp.oraf");
    files["react_clamp"] = "react_clamp.oraf";
  }
  const KnnIndex bank(shaped.data, std::min(a.knn_k, shaped.size()));
  write_tensor(make_tensor(bank.bank()), dir / "knn_bank.oraf");
  files["knn_bank"] = "knn_bank.oraf";

  json meta{{"centering", to_string(strategy)},
            {"class_index", a.class_index},
            {"shape", to_string(cal.config.method)},
            {"shape_percentile", cal.config.percentile},
            {"recenter_shaped", !a.keep_unshaped_center},
            {"knn_k", a.knn_k},
            {"n_id", x_id.size()},
            {"dim", x_id.dim()},
            {"inputs", {{"id_train", input_entry(a.id_train)}}},
            {"files", files}};
  if (cal.config.react_clamp) meta["react_clamp"] = *cal.config.react_clamp;
  write_text(dir / kCalibrationFile, meta.dump(2) + "\n");
  out << meta.dump(2) << '\n';
}

void cmd_score(const ScoreArgs& a, std::ostream& out) {
  const Method method = parse_method(a.method);
  const Aggregation agg = parse_aggregation(a.agg);
  FeatureMatrix x = load_features(a.features);

  std::optional<Calibration> cal;
  if (!a.calibration.empty()) cal = Calibration::load(a.calibration);
  const bool needs_calibration = method == Method::ora || method == Method::fdbd ||
                                 method == Method::knn;
  if (needs_calibration && !cal) {
    throw Error(Errc::usage, "method '" + a.method + "' needs --calibration");
  }
  const bool needs_head = method != Method::knn;
  if (needs_head && !a.head.given()) {
    throw Error(Errc::usage, "method '" + a.method + "' needs --weights");
  }

  ShapingConfig shaping = a.shape.config();
  if (cal) {
    if (a.shape.method != "none" && parse_shape_method(a.shape.method) != cal->shaping.method) {
      throw Error(Errc::usage, "--shape conflicts with the calibration's shaping");
    }
    shaping = cal->shaping;
  } else if (shaping.method == ShapeMethod::react) {
    throw Error(Errc::usage, "react shaping needs --calibration");
  }
  x = shape_features(x, shaping);

  json inputs{{"features", input_entry(a.features)}};
  std::optional<LinearHead> head;
  if (a.head.given()) {
    head = a.head.load();
    inputs["weights"] = input_entry(a.head.weights);
    if (!a.head.bias.empty()) inputs["bias"] = input_entry(a.head.bias);
  }

  BatchScores scores;
  switch (method) {
    case Method::ora: scores = ora_scores_batch(x, *head, cal->centering, agg); break;
    case Method::fdbd: scores = fdbd_scores(x, *head, cal->mu_id); break;
    case Method::msp:
    case Method::maxlogit:
    case Method::energy: scores = logit_scores(x, *head, method); break;
    case Method::knn: scores = knn_scores(x, cal->knn(a.knn_k)); break;
  }
  fail_on_row_errors(scores, "score");
  if (cal) {
    for (const auto& p : cal->files_used) inputs[p.filename().string()] = input_entry(p);
  }

  json config{{"method", to_string(method)},
              {"agg", to_string(agg)},
              {"shape", to_string(shaping.method)},
              {"shape_percentile", shaping.percentile},
              {"head_mode", a.head.mode}};
  if (cal) {
    config["centering"] = to_string(cal->centering.strategy);
    config["calibration"] = cal->meta;
  }
  if (method == Method::knn) config["knn_k"] = a.knn_k.value_or(cal->meta.value("knn_k", kDefaultKnnK));

  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  write_vector(scores.scores, out_path);

  json meta{{"method", to_string(method)},
            {"config", config},
            {"config_hash", sha1_hex(config.dump())},
            {"inputs", inputs},
            {"n", scores.scores.size()},
            {"source", fs::path(a.features).generic_string()}};
  if (!x.sample_ids.empty()) meta["sample_ids"] = x.sample_ids;
  write_text(sidecar_path(out_path), meta.dump(2) + "\n");
  out << json{{"scores", out_path.generic_string()},
              {"n", scores.scores.size()},
              {"method", to_string(method)},
              {"config_hash", meta["config_hash"]}}
             .dump(2)
      << '\n';
}

std::string method_from_sidecar(const fs::path& score_path) {
  if (auto j = read_json_if_exists(sidecar_path(score_path))) {
    if (j->contains("method") && (*j)["method"].is_string()) return (*j)["method"];
  }
  return "unknown";
}

void emit_report(const DetectionReport& r, const std::string& out_path, std::ostream& out) {
  const std::string text = to_json(r).dump(2) + "\n";
  if (!out_path.empty()) write_text(out_path, text);
  out << text;
}

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto id = read_vector(a.id);
  const auto ood = read_vector(a.ood);
  auto report = evaluate(id, ood, a.tpr);
  report.method = a.method.empty() ? method_from_sidecar(a.id) : a.method;
  report.id_name = a.id_name.empty() ? fs::path(a.id).stem().string() : a.id_name;
  report.ood_name = a.ood_name.empty() ? fs::path(a.ood).stem().string() : a.ood_name;
  emit_report(report, a.out, out);
}

ScoreTable load_table(const std::vector<std::string>& paths, const std::vector<std::string>& names,
                      std::vector<std::optional<std::string>>& model_ids) {
  ScoreTable t;
  model_ids.clear();
  for (std::size_t k = 0; k < paths.size(); ++k) {
    t.scores.push_back(read_vector(paths[k]));
    t.model_names.push_back(k < names.size() ? names[k] : fs::path(paths[k]).stem().string());
    std::vector<std::string> ids;
    std::optional<std::string> model;
    if (auto meta = read_json_if_exists(sidecar_path(paths[k]))) {
      if (meta->contains("sample_ids")) ids = (*meta)["sample_ids"].get<std::vector<std::string>>();
      const auto ptr = json::json_pointer("/inputs/weights/blob");
      if (meta->contains(ptr)) model = (*meta)[ptr].get<std::string>();
    }
    t.sample_ids.push_back(std::move(ids));
    model_ids.push_back(std::move(model));
  }
  return t;
}

void cmd_ensemble(const EnsembleArgs& a, std::ostream& out) {
  if (a.id.size() != a.ood.size()) {
    throw Error(Errc::model_set_mismatch, "got " + std::to_string(a.id.size()) +
                                              " ID score files and " + std::to_string(a.ood.size()) +
                                              " OOD score files");
  }
  if (!a.names.empty() && a.names.size() != a.id.size()) {
    throw Error(Errc::usage, "--names must list one name per model");
  }
  std::vector<std::optional<std::string>> id_models, ood_models;
  ScoreTable id = load_table(a.id, a.names, id_models);
  ScoreTable ood = load_table(a.ood, a.names.empty() ? id.model_names : a.names, ood_models);
  for (std::size_t k = 0; k < id_models.size(); ++k) {
    if (id_models[k] && ood_models[k] && *id_models[k] != *ood_models[k]) {
      throw Error(Errc::model_set_mismatch, "model " + std::to_string(k) +
                                                " was scored with different heads for ID and OOD");
    }
  }
  EnsembleConfig cfg;
  cfg.tpr = a.tpr;
  cfg.normalization =
      a.normalize == "zscore" ? EnsembleNormalization::zscore : EnsembleNormalization::none;
  auto report = evaluate_ensemble(id, ood, cfg);
  std::string joined;
  for (const auto& n : id.model_names) joined += (joined.empty() ? "" : "+") + n;
  report.method = "ensemble(" + joined + ")";
  report.id_name = "id";
  report.ood_name = "ood";
  emit_report(report, a.out, out);
}

void cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const fs::path dir = a.out;
  ensure_dir(dir);
  const Aggregation agg = parse_aggregation(a.agg);
  const auto cal = Calibration::load(a.calibration);
  const LinearHead head = a.head.load();
  const FeatureMatrix id = shape_features(load_features(a.id_features), cal.shaping);
  const FeatureMatrix ood = shape_features(load_features(a.ood_features), cal.shaping);

  struct Series {
    const char* name;
    BatchScores id;
    BatchScores ood;
  };
  std::vector<Series> series;
  series.push_back({"theta", ora_scores_batch(id, head, cal.centering, agg),
                    ora_scores_batch(ood, head, cal.centering, agg)});
  series.push_back({"sin_alpha", alpha_sine_scores(id, head, cal.centering),
                    alpha_sine_scores(ood, head, cal.centering)});
  series.push_back({"distance", boundary_distances(id, head), boundary_distances(ood, head)});

  json summary = json::object();
  for (const auto& s : series) {
    fail_on_row_errors(s.id, std::string(s.name) + " (ID)");
    fail_on_row_errors(s.ood, std::string(s.name) + " (OOD)");
    const auto h = shared_histogram(s.id.scores, s.ood.scores, a.bins);
    const std::string file = std::string(s.name) + "_hist.csv";
    write_text(dir / file, histogram_csv(h));
    const auto r = evaluate(s.id.scores, s.ood.scores, a.tpr);
    double id_mean = 0.0, ood_mean = 0.0;
    for (double v : s.id.scores) id_mean += v;
    for (double v : s.ood.scores) ood_mean += v;
    id_mean /= static_cast<double>(s.id.scores.size());
    ood_mean /= static_cast<double>(s.ood.scores.size());
    summary[s.name] = json{{"histogram", file}, {"auroc", r.auroc},       {"fpr95", r.fpr95},
                           {"id_mean", id_mean}, {"ood_mean", ood_mean}, {"range", {h.lo, h.hi}}};
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << summary.dump(2) << '\n';
}

void print_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-hoc OOD detection with relative angles to decision boundaries", "ora"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a deterministic synthetic ID/OOD world");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--seed", synth_args.spec.seed, "generator seed");
  synth->add_option("--dim", synth_args.spec.dim, "feature dimension");
  synth->add_option("--classes", synth_args.spec.classes, "number of classes");
  synth->add_option("--radius", synth_args.spec.radius, "class-mean norm");
  synth->add_option("--sigma", synth_args.spec.sigma_id, "ID per-coordinate std");
  synth->add_option("--delta", synth_args.spec.delta, "OOD shift magnitude");
  synth->add_option("--n-train", synth_args.spec.n_train, "ID training rows");
  synth->add_option("--n-test", synth_args.spec.n_test, "ID test rows");
  synth->add_option("--n-ood", synth_args.spec.n_ood, "OOD rows");

  CalibrateArgs cal_args;
  auto* calibrate = app.add_subcommand("calibrate", "compute ID statistics for scoring");
  calibrate->add_option("--id-train", cal_args.id_train, "ID feature tensor")->required();
  calibrate->add_option("--labels", cal_args.labels, "ID label tensor (class_mean centering)");
  cal_args.head.add_to(*calibrate, false);
  calibrate->add_option("--centering", cal_args.centering, "centering strategy")
      ->check(CLI::IsMember({"global_mean", "class_mean", "predicted_class_mean",
                             "elementwise_max", "elementwise_min", "elementwise_median",
                             "origin"}));
  calibrate->add_option("--class", cal_args.class_index, "class for class_mean centering");
  cal_args.shape.add_to(*calibrate);
  calibrate->add_option("--knn-k", cal_args.knn_k, "default k for the k-NN bank")
      ->check(CLI::PositiveNumber);
  calibrate->add_flag("--keep-unshaped-center", cal_args.keep_unshaped_center,
                      "compute the centering on unshaped ID features");
  calibrate->add_option("--out", cal_args.out, "output directory")->required();

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "score feature rows with one method");
  score->add_option("--method", score_args.method, "ora, fdbd, msp, maxlogit, energy, knn")
      ->check(CLI::IsMember({"ora", "fdbd", "msp", "maxlogit", "energy", "knn"}));
  score->add_option("--features", score_args.features, "feature tensor")->required();
  score->add_option("--calibration", score_args.calibration, "calibration directory");
  score_args.head.add_to(*score, false);
  score->add_option("--agg", score_args.agg, "max, mean or min")
      ->check(CLI::IsMember({"max", "mean", "min"}));
  score_args.shape.add_to(*score);
  score->add_option("--knn-k", score_args.knn_k, "k for knn")->check(CLI::PositiveNumber);
  score->add_option("--out", score_args.out, "output score tensor")->required();

  EvaluateArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "FPR95 / AUROC for ID vs OOD scores");
  evaluate_cmd->add_option("--id", eval_args.id, "ID score tensor")->required();
  evaluate_cmd->add_option("--ood", eval_args.ood, "OOD score tensor")->required();
  evaluate_cmd->add_option("--tpr", eval_args.tpr, "ID acceptance rate")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--method", eval_args.method, "method label for the report");
  evaluate_cmd->add_option("--id-name", eval_args.id_name, "ID dataset label");
  evaluate_cmd->add_option("--ood-name", eval_args.ood_name, "OOD dataset label");
  evaluate_cmd->add_option("--out", eval_args.out, "also write the report here");

  EnsembleArgs ens_args;
  auto* ensemble = app.add_subcommand("ensemble", "evaluate summed scores of several models");
  ensemble->add_option("--id", ens_args.id, "ID score tensors, one per model")->required();
  ensemble->add_option("--ood", ens_args.ood, "OOD score tensors, same model order")->required();
  ensemble->add_option("--names", ens_args.names, "model names");
  ensemble->add_option("--normalize", ens_args.normalize, "none or zscore")
      ->check(CLI::IsMember({"none", "zscore"}));
  ensemble->add_option("--tpr", ens_args.tpr, "ID acceptance rate")->check(CLI::Range(0.0, 1.0));
  ensemble->add_option("--out", ens_args.out, "also write the report here");

  DiagnoseArgs diag_args;
  auto* diagnose = app.add_subcommand("diagnose", "theta / sin(alpha) / distance histograms");
  diagnose->add_option("--id-features", diag_args.id_features, "ID feature tensor")->required();
  diagnose->add_option("--ood-features", diag_args.ood_features, "OOD feature tensor")
      ->required();
  diagnose->add_option("--calibration", diag_args.calibration, "calibration directory")
      ->required();
  diag_args.head.add_to(*diagnose, true);
  diagnose->add_option("--agg", diag_args.agg, "aggregation for theta")
      ->check(CLI::IsMember({"max", "mean", "min"}));
  diagnose->add_option("--bins", diag_args.bins, "histogram bins")->check(CLI::PositiveNumber);
  diagnose->add_option("--tpr", diag_args.tpr, "ID acceptance rate")->check(CLI::Range(0.0, 1.0));
  diagnose->add_option("--out", diag_args.out, "output directory")->required();

  try {
    const auto args = merge_config(raw_args);
    std::vector<std::string> argv_storage{"ora"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_storage) argv.push_back(s.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      print_error(err, "usage", e.what());
      return kExitUsage;
    }

    if (*synth) cmd_synth(synth_args, out);
    else if (*calibrate) cmd_calibrate(cal_args, out);
    else if (*score) cmd_score(score_args, out);
    else if (*evaluate_cmd) cmd_evaluate(eval_args, out);
    else if (*ensemble) cmd_ensemble(ens_args, out);
    else if (*diagnose) cmd_diagnose(diag_args, out);
    return kExitOk;
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.what());
    return e.code() == Errc::usage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kExitData;
  }
}

}  // namespace ora::cli
