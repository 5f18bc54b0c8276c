#include "nuce/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/core.h>

namespace nuce {

std::size_t GroupedDataset::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::int64_t> GroupedDataset::distinct_groups() const {
  std::set<std::int64_t> unique(groups.begin(), groups.end());
  return {unique.begin(), unique.end()};
}

GroupedDataset GroupedDataset::subset(std::span<const std::size_t> rows) const {
  GroupedDataset out;
  out.features = gather_rows(features, rows);
  out.labels.reserve(rows.size());
  out.groups.reserve(rows.size());
  for (std::size_t r : rows) {
    out.labels.push_back(labels[r]);
    out.groups.push_back(groups[r]);
  }
  return out;
}

void GroupedDataset::validate() const {
  if (features.rows() != labels.size() || groups.size() != labels.size()) {
    throw ShapeError(fmt::format("dataset: {} feature rows, {} labels, {} group ids", features.rows(), labels.size(),
                                 groups.size()));
  }
  require_finite(features.data(), "dataset features");
}

std::size_t SynthConfig::positive_count() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n_total) * positive_rate));
}

void SynthConfig::validate() const {
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw ConfigError("positive_rate must lie in (0, 1)");
  if (n_total == 0) throw ConfigError("n_total must be positive");
  if (n_groups == 0 || n_groups > n_total) throw ConfigError("n_groups must lie in [1, n_total]");
  if (d_in == 0) throw ConfigError("d_in must be positive");
  if (!std::isfinite(class_separation)) throw ConfigError("class_separation must be finite");
  if (!(overlap_noise >= 0.0) || !std::isfinite(overlap_noise)) throw ConfigError("overlap_noise must be >= 0");
  if (!(group_offset_scale >= 0.0) || !std::isfinite(group_offset_scale)) {
    throw ConfigError("group_offset_scale must be >= 0");
  }
  const std::size_t positives = positive_count();
  if (positives == 0) throw ConfigError("synthetic config yields zero positives");
  if (positives >= n_total) throw ConfigError("synthetic config yields zero negatives");
}

GroupedDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  GroupedDataset data;
  data.labels.assign(cfg.n_total, 0);
  data.groups.resize(cfg.n_total);
  for (std::size_t r = 0; r < cfg.n_total; ++r) data.groups[r] = static_cast<std::int64_t>(r % cfg.n_groups);

  std::vector<std::size_t> group_order(cfg.n_groups);
  std::iota(group_order.begin(), group_order.end(), 0);
  std::shuffle(group_order.begin(), group_order.end(), rng);
  const std::size_t n_carriers = std::max<std::size_t>(1, (cfg.n_groups + 2) / 3);
  std::vector<bool> carrier(cfg.n_groups, false);
  for (std::size_t g = 0; g < n_carriers; ++g) carrier[group_order[g]] = true;

  std::vector<std::size_t> preferred;
  std::vector<std::size_t> others;
  for (std::size_t r = 0; r < cfg.n_total; ++r) (carrier[r % cfg.n_groups] ? preferred : others).push_back(r);
  std::shuffle(preferred.begin(), preferred.end(), rng);
  std::shuffle(others.begin(), others.end(), rng);
  preferred.insert(preferred.end(), others.begin(), others.end());
  const std::size_t positives = cfg.positive_count();
  for (std::size_t n = 0; n < positives; ++n) data.labels[preferred[n]] = 1;

  DenseMatrix offsets(cfg.n_groups, cfg.d_in);
  for (double& v : offsets.data()) v = normal(rng) * cfg.group_offset_scale * cfg.overlap_noise;

  data.features = DenseMatrix(cfg.n_total, cfg.d_in);
  for (std::size_t r = 0; r < cfg.n_total; ++r) {
    auto x = data.features.row(r);
    const auto off = offsets.row(r % cfg.n_groups);
    for (std::size_t j = 0; j < cfg.d_in; ++j) x[j] = off[j] + normal(rng) * cfg.overlap_noise;
    if (data.labels[r] == 1) x[0] += cfg.class_separation;
  }
  return data;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

GroupedDataset load_csv(const std::filesystem::path& path) {
  using Kind = CsvError::Kind;
  std::ifstream in(path);
  if (!in) throw CsvError(Kind::FileNotFound, fmt::format("{}: cannot open file", path.string()));

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw CsvError(Kind::EmptyFile, fmt::format("{}: file is empty", path.string()));
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_fields(trim(line));
  for (auto& h : header) h = trim(h);
  if (header.size() < 3 || header[0] != "group_id" || header[1] != "label") {
    throw CsvError(Kind::MissingColumns,
                   fmt::format("{}: header must be group_id,label,f0..f(d-1)", path.string()));
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j + 2] != fmt::format("f{}", j)) {
      throw CsvError(Kind::MissingColumns,
                     fmt::format("{}: column {} is '{}', expected 'f{}'", path.string(), j + 2, header[j + 2], j));
    }
  }

  GroupedDataset data;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_fields(trim(line));
    if (fields.size() != header.size()) {
      throw CsvError(Kind::ParseFailure, fmt::format("{}: row {} has {} fields, expected {}", path.string(), row,
                                                     fields.size(), header.size()));
    }
    std::int64_t group = 0;
    std::size_t label = 0;
    if (!parse_number(trim(fields[0]), group)) {
      throw CsvError(Kind::ParseFailure, fmt::format("{}: row {}: bad group_id '{}'", path.string(), row, fields[0]));
    }
    if (!parse_number(trim(fields[1]), label)) {
      throw CsvError(Kind::ParseFailure, fmt::format("{}: row {}: bad label '{}'", path.string(), row, fields[1]));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      const std::string text = trim(fields[j + 2]);
      if (!parse_number(text, v) || !std::isfinite(v)) {
        throw CsvError(Kind::ParseFailure,
                       fmt::format("{}: row {}: feature f{} is not a finite number ('{}')", path.string(), row, j, text));
      }
      values.push_back(v);
    }
    data.groups.push_back(group);
    data.labels.push_back(label);
  }
  if (row == 0) throw CsvError(Kind::EmptyFile, fmt::format("{}: header only, no data rows", path.string()));
  data.features = DenseMatrix(row, d, std::move(values));
  return data;
}

void write_csv(const GroupedDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("{}: cannot open for writing", path.string()));
  out << "group_id,label";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.groups[r] << ',' << data.labels[r];
    for (double v : data.features.row(r)) out << fmt::format(",{}", v);
    out << '\n';
  }
}

std::vector<FoldSplit> group_kfold(const GroupedDataset& data, std::size_t k, std::uint64_t seed) {
  data.validate();
  if (k < 2) throw ConfigError("group_kfold: k must be at least 2");
  auto groups = data.distinct_groups();
  if (groups.size() < k) {
    throw DataError(fmt::format("group_kfold: {} distinct groups cannot fill {} folds", groups.size(), k));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<std::pair<std::int64_t, std::size_t>> lookup;
  lookup.reserve(groups.size());
  for (std::size_t n = 0; n < groups.size(); ++n) lookup.emplace_back(groups[n], n % k);
  std::sort(lookup.begin(), lookup.end());

  std::vector<FoldSplit> folds(k);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(data.groups[r], std::size_t{0}));
    const std::size_t fold = it->second;
    for (std::size_t f = 0; f < k; ++f) (f == fold ? folds[f].val : folds[f].train).push_back(r);
  }
  return folds;
}

}  // namespace nuce
