#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nuce/data.hpp"
#include "nuce/trainer.hpp"

namespace nuce {

/// Everything one experiment command needs. Parsed from an INI file:
///
///   [data]        csv_path = ...   (or the synthetic generator keys)
///   [train]       epochs, batch_size, learning_rate, schedule,
///                 early_stop_patience, hidden_dim
///   [loss]        kind, lambda_r, lambda_c, gamma
///   [experiment]  folds, seeds, out, jobs
///   [sweep]       lambda_r, lambda_c, gamma   (comma-separated grids)
///
/// Missing keys keep their defaults; unknown sections or keys are errors.
struct ExperimentConfig {
  std::optional<SynthConfig> synthetic = SynthConfig{};
  std::optional<std::filesystem::path> csv_path;
  TrainConfig train;
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::filesystem::path out_dir = "results";
  std::size_t jobs = 1;

  std::vector<double> sweep_lambda_r;
  std::vector<double> sweep_lambda_c;
  std::vector<double> sweep_gamma;

  void validate() const;
};

/// Throws ConfigError with a readable message on any syntax or value error.
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config_text(const std::string& text);

/// Fully resolved config in the same INI dialect. The output directory is
/// left out so reruns into different directories write identical files;
/// parsing the text back yields the same configuration otherwise.
std::string render_config(const ExperimentConfig& cfg);

}  // namespace nuce
