#include "nuce/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/core.h>

#include "nuce/errors.hpp"

namespace nuce {

GroupedDataset load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.csv_path) return load_csv(*cfg.csv_path);
  return generate_synthetic(*cfg.synthetic);
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t fold) {
  // splitmix64 finaliser over the (seed, fold) pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(fold) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<RunResult> run_cross_validation(const GroupedDataset& data, const TrainConfig& train_cfg,
                                            std::span<const std::uint64_t> seeds, std::size_t folds,
                                            std::size_t jobs) {
  struct Task {
    std::uint64_t seed;
    std::size_t fold;
    FoldSplit split;
  };
  std::vector<Task> tasks;
  for (std::uint64_t seed : seeds) {
    auto splits = group_kfold(data, folds, seed);
    for (std::size_t f = 0; f < splits.size(); ++f) tasks.push_back({seed, f, std::move(splits[f])});
  }

  std::vector<RunResult> results(tasks.size());
  auto run_one = [&](std::size_t n) {
    TrainConfig cfg = train_cfg;
    cfg.seed = run_seed(tasks[n].seed, tasks[n].fold);
    const TrainReport report = train(data, tasks[n].split, cfg);
    const auto& best = report.history[report.best_epoch - 1];
    results[n] = {tasks[n].seed, tasks[n].fold, best.validation, report.stopped_epoch, report.best_epoch,
                  report.params};
  };

  if (jobs <= 1) {
    for (std::size_t n = 0; n < tasks.size(); ++n) run_one(n);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < std::min(jobs, tasks.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t n = next++; n < tasks.size(); n = next++) {
          try {
            run_one(n);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

const std::vector<std::string>& MetricColumns::names() {
  static const std::vector<std::string> kNames = {
      "accuracy",        "macro_precision",    "macro_recall",    "macro_f1",
      "weighted_precision", "weighted_recall", "weighted_f1"};
  return kNames;
}

std::vector<double> MetricColumns::values(const MetricBundle& m) {
  return {m.accuracy, m.macro.precision, m.macro.recall, m.macro.f1, m.weighted.precision, m.weighted.recall,
          m.weighted.f1};
}

double Summary::mean_of(const std::string& column) const {
  const auto& names = MetricColumns::names();
  const auto it = std::find(names.begin(), names.end(), column);
  if (it == names.end()) throw ConfigError(fmt::format("unknown metric column '{}'", column));
  return mean[static_cast<std::size_t>(it - names.begin())];
}

Summary summarize(std::span<const RunResult> runs) {
  const std::size_t cols = MetricColumns::names().size();
  Summary s;
  s.runs = runs.size();
  s.mean.assign(cols, 0.0);
  s.std.assign(cols, 0.0);
  if (runs.empty()) return s;
  for (const auto& r : runs) {
    const auto v = MetricColumns::values(r.metrics);
    for (std::size_t c = 0; c < cols; ++c) s.mean[c] += v[c];
  }
  for (double& m : s.mean) m /= static_cast<double>(runs.size());
  for (const auto& r : runs) {
    const auto v = MetricColumns::values(r.metrics);
    for (std::size_t c = 0; c < cols; ++c) s.std[c] += (v[c] - s.mean[c]) * (v[c] - s.mean[c]);
  }
  for (double& v : s.std) v = std::sqrt(v / static_cast<double>(runs.size()));
  return s;
}

nlohmann::json to_json(const Summary& s) {
  nlohmann::json j;
  j["runs"] = s.runs;
  const auto& names = MetricColumns::names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    j["mean"][names[c]] = s.mean[c];
    j["std"][names[c]] = s.std[c];
  }
  return j;
}

std::string metrics_csv(std::span<const RunResult> runs) {
  std::string out = "seed,fold";
  for (const auto& n : MetricColumns::names()) out += "," + n;
  out += ",stopped_epoch,best_epoch\n";
  for (const auto& r : runs) {
    out += fmt::format("{},{}", r.seed, r.fold);
    for (double v : MetricColumns::values(r.metrics)) out += fmt::format(",{}", v);
    out += fmt::format(",{},{}\n", r.stopped_epoch, r.best_epoch);
  }
  return out;
}

}  // namespace nuce
