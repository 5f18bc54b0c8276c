#include "nuce/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include "nuce/errors.hpp"

namespace nuce {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(fmt::format("[{}] {}: cannot parse '{}'", section, key, raw));
  }
  return value;
}

// Accepts a decimal or a ratio "a/b".
double parse_fraction(const std::string& section, const std::string& key, const std::string& raw) {
  const auto slash = raw.find('/');
  if (slash == std::string::npos) return parse_value<double>(section, key, raw);
  const double num = parse_value<double>(section, key, raw.substr(0, slash));
  const double den = parse_value<double>(section, key, raw.substr(slash + 1));
  if (den == 0.0) throw ConfigError(fmt::format("[{}] {}: zero denominator", section, key));
  return num / den;
}

template <typename T>
std::vector<T> parse_list(const std::string& section, const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::istringstream in(raw);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_value<T>(section, key, item));
  if (out.empty()) throw ConfigError(fmt::format("[{}] {}: empty list", section, key));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t n = 0; n < values.size(); ++n) out += (n ? "," : "") + fmt::format("{}", values[n]);
  return out;
}

ExperimentConfig from_tree(const pt::ptree& tree) {
  ExperimentConfig cfg;
  bool synthetic_key_seen = false;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(fmt::format("key '{}' appears outside any section", section));
    }
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      auto unknown = [&] { throw ConfigError(fmt::format("[{}] unknown key '{}'", section, key)); };
      if (section == "data") {
        SynthConfig& s = *cfg.synthetic;
        if (key == "csv_path") {
          cfg.csv_path = trim(value);
          continue;
        }
        synthetic_key_seen = true;
        if (key == "n_total") s.n_total = parse_value<std::size_t>(section, key, value);
        else if (key == "positive_rate") s.positive_rate = parse_fraction(section, key, value);
        else if (key == "n_groups") s.n_groups = parse_value<std::size_t>(section, key, value);
        else if (key == "d_in") s.d_in = parse_value<std::size_t>(section, key, value);
        else if (key == "class_separation") s.class_separation = parse_value<double>(section, key, value);
        else if (key == "overlap_noise") s.overlap_noise = parse_value<double>(section, key, value);
        else if (key == "group_offset_scale") s.group_offset_scale = parse_value<double>(section, key, value);
        else if (key == "seed") s.seed = parse_value<std::uint64_t>(section, key, value);
        else unknown();
      } else if (section == "train") {
        TrainConfig& t = cfg.train;
        if (key == "epochs") t.epochs = parse_value<std::size_t>(section, key, value);
        else if (key == "batch_size") t.batch_size = parse_value<std::size_t>(section, key, value);
        else if (key == "learning_rate") t.learning_rate = parse_value<double>(section, key, value);
        else if (key == "early_stop_patience") t.early_stop_patience = parse_value<std::size_t>(section, key, value);
        else if (key == "hidden_dim") t.hidden_dim = parse_value<std::size_t>(section, key, value);
        else if (key == "schedule") {
          const std::string s = trim(value);
          if (s == "cosine") t.schedule = Schedule::Cosine;
          else if (s == "constant") t.schedule = Schedule::Constant;
          else throw ConfigError(fmt::format("[train] schedule: expected cosine or constant, got '{}'", s));
        } else unknown();
      } else if (section == "loss") {
        LossConfig& l = cfg.train.loss;
        if (key == "kind") l.kind = parse_loss_kind(trim(value));
        else if (key == "lambda_r") l.lambda_r = parse_value<double>(section, key, value);
        else if (key == "lambda_c") l.lambda_c = parse_value<double>(section, key, value);
        else if (key == "gamma") l.gamma = parse_value<double>(section, key, value);
        else unknown();
      } else if (section == "experiment") {
        if (key == "folds") cfg.folds = parse_value<std::size_t>(section, key, value);
        else if (key == "seeds") cfg.seeds = parse_list<std::uint64_t>(section, key, value);
        else if (key == "out") cfg.out_dir = trim(value);
        else if (key == "jobs") cfg.jobs = parse_value<std::size_t>(section, key, value);
        else unknown();
      } else if (section == "sweep") {
        if (key == "lambda_r") cfg.sweep_lambda_r = parse_list<double>(section, key, value);
        else if (key == "lambda_c") cfg.sweep_lambda_c = parse_list<double>(section, key, value);
        else if (key == "gamma") cfg.sweep_gamma = parse_list<double>(section, key, value);
        else unknown();
      } else {
        throw ConfigError(fmt::format("unknown section [{}]", section));
      }
    }
  }

  if (cfg.csv_path) {
    if (synthetic_key_seen) throw ConfigError("[data] csv_path cannot be combined with synthetic generator keys");
    cfg.synthetic.reset();
  }
  cfg.validate();
  return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (synthetic.has_value() == csv_path.has_value()) throw ConfigError("exactly one data source is required");
  if (synthetic) synthetic->validate();
  train.validate();
  if (folds < 2) throw ConfigError("[experiment] folds must be >= 2");
  if (seeds.empty()) throw ConfigError("[experiment] seeds must not be empty");
  if (jobs < 1) throw ConfigError("[experiment] jobs must be >= 1");
  const bool any_grid = !sweep_lambda_r.empty() || !sweep_lambda_c.empty() || !sweep_gamma.empty();
  const bool full_grid = !sweep_lambda_r.empty() && !sweep_lambda_c.empty() && !sweep_gamma.empty();
  if (any_grid && !full_grid) throw ConfigError("[sweep] needs lambda_r, lambda_c and gamma lists together");
}

ExperimentConfig parse_experiment_config_text(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax error: {}", e.what()));
  }
  return from_tree(tree);
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_tree(tree);
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out = "[data]\n";
  if (cfg.csv_path) {
    out += fmt::format("csv_path = {}\n", cfg.csv_path->string());
  } else {
    const SynthConfig& s = *cfg.synthetic;
    out += fmt::format("n_total = {}\npositive_rate = {}\nn_groups = {}\nd_in = {}\n", s.n_total, s.positive_rate,
                       s.n_groups, s.d_in);
    out += fmt::format("class_separation = {}\noverlap_noise = {}\ngroup_offset_scale = {}\nseed = {}\n",
                       s.class_separation, s.overlap_noise, s.group_offset_scale, s.seed);
  }
  const TrainConfig& t = cfg.train;
  out += fmt::format("\n[train]\nepochs = {}\nbatch_size = {}\nlearning_rate = {}\nschedule = {}\n", t.epochs,
                     t.batch_size, t.learning_rate, t.schedule == Schedule::Cosine ? "cosine" : "constant");
  out += fmt::format("early_stop_patience = {}\nhidden_dim = {}\n", t.early_stop_patience, t.hidden_dim);
  out += fmt::format("\n[loss]\nkind = {}\nlambda_r = {}\nlambda_c = {}\ngamma = {}\n", to_string(t.loss.kind),
                     t.loss.lambda_r, t.loss.lambda_c, t.loss.gamma);
  out += fmt::format("\n[experiment]\nfolds = {}\nseeds = {}\njobs = {}\n", cfg.folds, join(cfg.seeds), cfg.jobs);
  if (!cfg.sweep_lambda_r.empty()) {
    out += fmt::format("\n[sweep]\nlambda_r = {}\nlambda_c = {}\ngamma = {}\n", join(cfg.sweep_lambda_r),
                       join(cfg.sweep_lambda_c), join(cfg.sweep_gamma));
  }
  return out;
}

}  // namespace nuce
