#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nuce/config.hpp"
#include "nuce/data.hpp"
#include "nuce/metrics.hpp"
#include "nuce/trainer.hpp"

namespace nuce {

struct RunResult {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  MetricBundle metrics;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  /// Parameters from the best validation epoch.
  ModelParams params;
};

/// Synthetic data or the CSV named by the config.
GroupedDataset load_experiment_data(const ExperimentConfig& cfg);

/// Seed used to initialise and shuffle the run for (seed, fold).
std::uint64_t run_seed(std::uint64_t seed, std::size_t fold);

/// Every seed x fold run. Folds come from group_kfold(data, folds, seed),
/// so configurations run with the same seeds share fold assignments. Runs
/// may execute on up to `jobs` threads; results are ordered by (seed, fold).
std::vector<RunResult> run_cross_validation(const GroupedDataset& data, const TrainConfig& train,
                                            std::span<const std::uint64_t> seeds, std::size_t folds,
                                            std::size_t jobs = 1);

/// Named metric columns in their fixed CSV order.
struct MetricColumns {
  static const std::vector<std::string>& names();
  static std::vector<double> values(const MetricBundle& m);
};

struct Summary {
  std::size_t runs = 0;
  std::vector<double> mean;  // MetricColumns order
  std::vector<double> std;   // population standard deviation

  double mean_of(const std::string& column) const;
};

Summary summarize(std::span<const RunResult> runs);
nlohmann::json to_json(const Summary& s);

/// One row per run: seed,fold,<metric columns>,stopped_epoch,best_epoch.
std::string metrics_csv(std::span<const RunResult> runs);

}  // namespace nuce
