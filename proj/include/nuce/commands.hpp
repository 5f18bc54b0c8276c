#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nuce {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitInputError = 2,
  kExitDataError = 3,
};

/// Flags shared by every subcommand plus the few that only one uses.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;

  // detect-eval
  std::optional<std::filesystem::path> input;
  std::vector<double> iou_thresholds;
  std::vector<double> taus;

  // pca
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> data;

  // gradcheck
  std::size_t instances = 20;
  std::string perturb;
};

/// Writes the synthetic dataset described by [data] to <out>/data.csv.
int cmd_generate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// seeds x folds cross-validation: metrics.csv, summary.json, config.ini,
/// model.json (first seed, fold 0) and val_split.csv (that fold's rows).
int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// cross_entropy / uncertainty_weighting / full_nuce on shared folds.
int cmd_ablation(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Grid over (lambda_r, lambda_c, gamma), rows sorted by macro-F1.
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_detect_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_pca(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Dispatches by subcommand name, mapping exceptions to exit codes.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err);

struct AblationRow {
  std::string label;
  double lambda_r;
  double lambda_c;
  double gamma;
};

/// The three ablation rows derived from the [loss] section.
std::vector<AblationRow> ablation_rows(double lambda_r, double lambda_c, double gamma);

struct SweepPoint {
  double lambda_r;
  double lambda_c;
  double gamma;
};

/// The six-row default sensitivity grid.
std::vector<SweepPoint> default_sweep_grid();

}  // namespace nuce
