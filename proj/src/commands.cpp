#include "nuce/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/core.h>
#include <json.hpp>

#include "nuce/analysis.hpp"
#include "nuce/config.hpp"
#include "nuce/data.hpp"
#include "nuce/detection.hpp"
#include "nuce/errors.hpp"
#include "nuce/experiment.hpp"
#include "nuce/gradcheck.hpp"
#include "nuce/trainer.hpp"

namespace nuce {

namespace fs = std::filesystem;

namespace {

ExperimentConfig resolve_config(const CommandOptions& opts) {
  ExperimentConfig cfg = opts.config ? parse_experiment_config(*opts.config) : ExperimentConfig{};
  if (opts.seed) cfg.seeds = {*opts.seed};
  if (opts.out) cfg.out_dir = *opts.out;
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError(fmt::format("{}: cannot create output directory: {}", dir.string(), ec.message()));
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("{}: cannot open for writing", path.string()));
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string summary_row(const Summary& s) {
  std::string row = fmt::format("{}", s.runs);
  for (double v : s.mean) row += fmt::format(",{}", v);
  row += fmt::format(",{}", s.std[3]);
  return row;
}

std::string summary_header() {
  std::string h = "runs";
  for (const auto& n : MetricColumns::names()) h += "," + n;
  return h + ",macro_f1_std";
}

nlohmann::json loss_json(const LossConfig& l) {
  return {{"kind", std::string(to_string(l.kind))}, {"lambda_r", l.lambda_r}, {"lambda_c", l.lambda_c},
          {"gamma", l.gamma}};
}

}  // namespace

std::vector<AblationRow> ablation_rows(double lambda_r, double lambda_c, double gamma) {
  return {{"cross_entropy", 1.0, 0.0, 0.0},
          {"uncertainty_weighting", lambda_r, 0.0, gamma},
          {"full_nuce", lambda_r, lambda_c, gamma}};
}

std::vector<SweepPoint> default_sweep_grid() {
  return {{0.5, 0.5, 2.0}, {1.0, 0.0, 2.0}, {1.0, 0.5, 1.0}, {1.0, 0.5, 2.0}, {1.0, 1.0, 2.0}, {1.5, 0.5, 2.0}};
}

int cmd_generate(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  const ExperimentConfig cfg = resolve_config(opts);
  if (!cfg.synthetic) throw ConfigError("generate needs a synthetic [data] section");
  const GroupedDataset data = generate_synthetic(*cfg.synthetic);
  const fs::path dir = prepare_out(cfg.out_dir);
  write_csv(data, dir / "data.csv");
  std::size_t positives = std::count(data.labels.begin(), data.labels.end(), std::size_t{1});
  out << fmt::format("wrote {} rows ({} positive, {} groups) to {}\n", data.size(), positives,
                     data.distinct_groups().size(), (dir / "data.csv").string());
  return kExitOk;
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  const ExperimentConfig cfg = resolve_config(opts);
  const GroupedDataset data = load_experiment_data(cfg);
  const auto runs = run_cross_validation(data, cfg.train, cfg.seeds, cfg.folds, cfg.jobs);
  const Summary summary = summarize(runs);

  const fs::path dir = prepare_out(cfg.out_dir);
  write_text(dir / "config.ini", render_config(cfg));
  write_text(dir / "metrics.csv", metrics_csv(runs));
  nlohmann::json s = to_json(summary);
  s["loss"] = loss_json(cfg.train.loss);
  s["folds"] = cfg.folds;
  s["seeds"] = cfg.seeds;
  write_text(dir / "summary.json", dump(s));

  save_model(runs.front().params, dir / "model.json");
  const auto splits = group_kfold(data, cfg.folds, cfg.seeds.front());
  write_csv(data.subset(splits.front().val), dir / "val_split.csv");

  out << fmt::format("{} runs: accuracy {:.4f}, macro-F1 {:.4f} (std {:.4f}), weighted-F1 {:.4f}\n", summary.runs,
                     summary.mean_of("accuracy"), summary.mean_of("macro_f1"), summary.std[3],
                     summary.mean_of("weighted_f1"));
  return kExitOk;
}

int cmd_ablation(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  const ExperimentConfig cfg = resolve_config(opts);
  const GroupedDataset data = load_experiment_data(cfg);
  const LossConfig& base = cfg.train.loss;

  std::string table = "label,lambda_r,lambda_c,gamma," + summary_header() + "\n";
  std::string per_run;
  nlohmann::json summaries;
  for (const auto& row : ablation_rows(base.lambda_r, base.lambda_c, base.gamma)) {
    TrainConfig tc = cfg.train;
    tc.loss = {row.lambda_r, row.lambda_c, row.gamma, LossKind::Nuce};
    const auto runs = run_cross_validation(data, tc, cfg.seeds, cfg.folds, cfg.jobs);
    const Summary s = summarize(runs);
    table += fmt::format("{},{},{},{},{}\n", row.label, row.lambda_r, row.lambda_c, row.gamma, summary_row(s));
    const std::string csv = metrics_csv(runs);
    if (per_run.empty()) per_run = "label," + csv.substr(0, csv.find('\n') + 1);
    for (std::size_t pos = csv.find('\n') + 1; pos < csv.size();) {
      const std::size_t end = csv.find('\n', pos);
      per_run += row.label + "," + csv.substr(pos, end - pos + 1);
      pos = end + 1;
    }
    summaries[row.label] = to_json(s);
    summaries[row.label]["loss"] = loss_json(tc.loss);
    out << fmt::format("{:<22} lambda=({}, {}, {})  macro-F1 {:.4f}  accuracy {:.4f}\n", row.label, row.lambda_r,
                       row.lambda_c, row.gamma, s.mean_of("macro_f1"), s.mean_of("accuracy"));
  }

  const fs::path dir = prepare_out(cfg.out_dir);
  write_text(dir / "config.ini", render_config(cfg));
  write_text(dir / "ablation.csv", table);
  write_text(dir / "ablation_runs.csv", per_run);
  write_text(dir / "ablation.json", dump(summaries));
  return kExitOk;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  const ExperimentConfig cfg = resolve_config(opts);
  std::vector<SweepPoint> grid;
  if (cfg.sweep_lambda_r.empty()) {
    grid = default_sweep_grid();
  } else {
    for (double r : cfg.sweep_lambda_r)
      for (double c : cfg.sweep_lambda_c)
        for (double g : cfg.sweep_gamma) grid.push_back({r, c, g});
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");

  const GroupedDataset data = load_experiment_data(cfg);
  struct Row {
    SweepPoint point;
    Summary summary;
  };
  std::vector<Row> rows;
  for (const auto& point : grid) {
    TrainConfig tc = cfg.train;
    tc.loss = {point.lambda_r, point.lambda_c, point.gamma, LossKind::Nuce};
    rows.push_back({point, summarize(run_cross_validation(data, tc, cfg.seeds, cfg.folds, cfg.jobs))});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.summary.mean_of("macro_f1") > b.summary.mean_of("macro_f1");
  });

  std::string table = "lambda_r,lambda_c,gamma," + summary_header() + "\n";
  for (const auto& r : rows) {
    table += fmt::format("{},{},{},{}\n", r.point.lambda_r, r.point.lambda_c, r.point.gamma, summary_row(r.summary));
    out << fmt::format("({}, {}, {})  macro-F1 {:.4f}  accuracy {:.4f}\n", r.point.lambda_r, r.point.lambda_c,
                       r.point.gamma, r.summary.mean_of("macro_f1"), r.summary.mean_of("accuracy"));
  }
  const fs::path dir = prepare_out(cfg.out_dir);
  write_text(dir / "config.ini", render_config(cfg));
  write_text(dir / "sweep.csv", table);
  return kExitOk;
}

int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  GradCheckOptions g;
  g.seed = opts.seed.value_or(0);
  g.instances = opts.instances;
  g.perturb = opts.perturb;
  const GradCheckReport report = run_gradcheck(g);

  std::string table = "loss,block,max_rel_error,status\n";
  out << fmt::format("{:<14} {:<5} {:>14}  {}\n", "loss", "block", "max_rel_error", "status");
  for (const auto& row : report.rows) {
    const char* status = row.pass ? "ok" : "FAIL";
    out << fmt::format("{:<14} {:<5} {:>14.3e}  {}\n", row.loss, row.block, row.max_rel_error, status);
    table += fmt::format("{},{},{:.6e},{}\n", row.loss, row.block, row.max_rel_error, status);
    if (!row.pass) {
      err << fmt::format("gradient mismatch: {} w.r.t. {} (max relative error {:.3e} >= {:.0e})\n", row.loss,
                         row.block, row.max_rel_error, g.tolerance);
    }
  }
  if (opts.out) write_text(prepare_out(*opts.out) / "gradcheck.csv", table);
  return report.all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_detect_eval(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  if (!opts.input) throw ConfigError("detect-eval needs --input <detections.jsonl>");
  const auto sets = load_detections_jsonl(*opts.input);

  std::size_t gt = 0, preds = 0;
  for (const auto& s : sets) {
    gt += s.ground_truth.size();
    preds += s.predictions.size();
  }
  if (gt == 0) throw DataError(fmt::format("{}: no ground-truth boxes", opts.input->string()));

  const MapSuite suite = map_suite(sets);
  nlohmann::json j;
  j["mAP"] = suite.map;
  j["mAP@25"] = suite.map25;
  j["mAP@50"] = suite.map50;
  j["mAP@75"] = suite.map75;
  j["images"] = sets.size();
  j["ground_truth"] = gt;
  j["predictions"] = preds;
  for (double t : opts.iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError(fmt::format("IoU threshold {} outside (0, 1]", t));
    j["ap"][fmt::format("{:.2f}", t)] = average_precision(sets, t);
  }

  std::vector<double> scores;
  for (const auto& s : sets) scores.push_back(gate_score(s));
  for (double tau : opts.taus) {
    const auto decisions = cascade_gate(scores, tau);
    std::vector<DetectionSet> gated = sets;
    std::size_t forwarded = 0, forwarded_with_gt = 0;
    for (std::size_t n = 0; n < gated.size(); ++n) {
      if (decisions[n]) {
        ++forwarded;
        if (!gated[n].ground_truth.empty()) ++forwarded_with_gt;
      } else {
        gated[n].predictions.clear();
      }
    }
    j["gate"].push_back({{"tau", tau},
                         {"forwarded", forwarded},
                         {"forwarded_with_gt", forwarded_with_gt},
                         {"images", sets.size()},
                         {"gated_mAP@50", average_precision(gated, 0.5)}});
  }

  const std::string text = dump(j);
  out << text;
  if (opts.out) write_text(prepare_out(*opts.out) / "detection.json", text);
  return kExitOk;
}

int cmd_pca(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  if (!opts.model) throw ConfigError("pca needs --model <model.json>");
  const ModelParams model = load_model(*opts.model);

  GroupedDataset data;
  fs::path dir;
  if (opts.data) {
    data = load_csv(*opts.data);
    dir = opts.out.value_or("results");
  } else {
    const ExperimentConfig cfg = resolve_config(opts);
    data = load_experiment_data(cfg);
    dir = cfg.out_dir;
  }
  if (data.dim() != model.input_dim()) {
    throw ShapeError(fmt::format("data has {} features, model expects {}", data.dim(), model.input_dim()));
  }
  const std::size_t K = std::max(model.num_classes(), data.num_classes());
  if (K > model.num_classes()) throw ShapeError("data has labels the model has no class for");

  const DenseMatrix H = forward(model, data.features).H;
  const ProjectionResult proj = pca_2d(H);
  const ClusterStats centroid_stats = cluster_stats(H, data.labels, class_centroids(H, data.labels, K));
  const ClusterStats anchor_stats = cluster_stats(H, data.labels, model.anchors);

  dir = prepare_out(dir);
  write_projection_csv(proj, data.labels, dir / "projection.csv");
  write_projection_svg(proj, data.labels, dir / "projection.svg");
  nlohmann::json j;
  j["rows"] = data.size();
  j["explained_variance"] = {proj.explained_variance[0], proj.explained_variance[1]};
  j["centroids"] = to_json(centroid_stats);
  j["model_anchors"] = to_json(anchor_stats);
  write_text(dir / "cluster_stats.json", dump(j));

  out << fmt::format("projected {} rows; fisher ratio (class centroids) {}\n", data.size(),
                     centroid_stats.ratio_kind == ClusterStats::Ratio::Finite
                         ? fmt::format("{:.4f}", centroid_stats.fisher_ratio)
                         : std::string(centroid_stats.ratio_kind == ClusterStats::Ratio::Infinite ? "infinite"
                                                                                                  : "undefined"));
  return kExitOk;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "generate") return cmd_generate(opts, out, err);
    if (name == "train") return cmd_train(opts, out, err);
    if (name == "ablation") return cmd_ablation(opts, out, err);
    if (name == "sweep") return cmd_sweep(opts, out, err);
    if (name == "gradcheck") return cmd_gradcheck(opts, out, err);
    if (name == "detect-eval") return cmd_detect_eval(opts, out, err);
    if (name == "pca") return cmd_pca(opts, out, err);
    err << fmt::format("unknown command '{}'\n", name);
    return kExitInputError;
  } catch (const CsvError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == CsvError::Kind::FileNotFound ? kExitInputError : kExitDataError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const ValueError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace nuce
