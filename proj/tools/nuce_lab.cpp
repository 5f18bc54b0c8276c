// Command-line front end for the NUCE laboratory.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nuce/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"NUCE loss laboratory: training, ablations, sweeps, gradient checks and detection scoring"};
  app.require_subcommand(1);

  nuce::CommandOptions opts;
  std::string out_dir;
  std::string config_path;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI experiment config");
    sub->add_option("--seed", seed, "Seed override");
    sub->add_option("--out", out_dir, "Output directory");
  };

  auto* generate = app.add_subcommand("generate", "Write the synthetic dataset to <out>/data.csv");
  auto* train = app.add_subcommand("train", "Cross-validated training over seeds x folds");
  auto* ablation = app.add_subcommand("ablation", "Cross-entropy vs uncertainty weighting vs full NUCE");
  auto* sweep = app.add_subcommand("sweep", "Loss-coefficient sensitivity grid");
  auto* gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients for every loss");
  auto* detect = app.add_subcommand("detect-eval", "mAP of single-class detections in JSON-lines form");
  auto* pca = app.add_subcommand("pca", "Project model embeddings to 2-D and report cluster statistics");
  for (auto* sub : {generate, train, ablation, sweep, gradcheck, detect, pca}) add_common(sub);

  gradcheck->add_option("--instances", opts.instances, "Random instances per loss")->check(CLI::PositiveNumber);
  gradcheck->add_option("--perturb", opts.perturb, "Corrupt one analytic gradient, e.g. nuce:W")->group("");

  std::string input;
  detect->add_option("--input,input", input, "Detections file (JSON lines)");
  detect->add_option("--iou", opts.iou_thresholds, "Extra IoU thresholds to report AP at")->delimiter(',');
  detect->add_option("--tau", opts.taus, "Cascade-gate thresholds to sweep")->delimiter(',');

  std::string model_path;
  std::string data_path;
  pca->add_option("--model", model_path, "Model JSON written by train")->required();
  pca->add_option("--data", data_path, "Feature CSV (defaults to the config's data)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nuce::kExitOk : nuce::kExitInputError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--config")) opts.config = config_path;
  if (chosen->count("--seed")) opts.seed = seed;
  if (chosen->count("--out")) opts.out = out_dir;
  if (!input.empty()) opts.input = input;
  if (!model_path.empty()) opts.model = model_path;
  if (!data_path.empty()) opts.data = data_path;

  return nuce::run_command(chosen->get_name(), opts, std::cout, std::cerr);
}
