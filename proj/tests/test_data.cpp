#include <filesystem>
#include <fstream>
#include <random>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "nuce/data.hpp"

using namespace nuce;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

CsvError::Kind csv_kind(const std::filesystem::path& path) {
  try {
    load_csv(path);
  } catch (const CsvError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no CsvError for " << path;
  return CsvError::Kind::FileNotFound;
}

GroupedDataset grouped(std::size_t n, std::size_t n_groups, std::mt19937_64& rng) {
  GroupedDataset d;
  d.features = DenseMatrix(n, 1);
  std::uniform_int_distribution<std::int64_t> gid(0, static_cast<std::int64_t>(n_groups) * 3);
  for (std::size_t i = 0; i < n; ++i) {
    d.labels.push_back(i % 2);
    d.groups.push_back(i < n_groups ? static_cast<std::int64_t>(i) * 3 : gid(rng));
  }
  return d;
}

}  // namespace

TEST(Synthetic, ExactPositiveCount) {
  const GroupedDataset d = generate_synthetic(SynthConfig{});
  EXPECT_EQ(d.size(), 13568u);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1u), 271);
  EXPECT_EQ(d.distinct_groups().size(), 90u);
  EXPECT_EQ(d.dim(), 8u);
}

TEST(Synthetic, ThresholdSeparatesWideClusters) {
  SynthConfig cfg;
  cfg.class_separation = 10.0;
  cfg.overlap_noise = 0.1;
  const GroupedDataset d = generate_synthetic(cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += (d.features(i, 0) > 5.0 ? 1u : 0u) == d.labels[i];
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(d.size()), 0.999);
}

TEST(Synthetic, SeedDeterminesDataset) {
  SynthConfig cfg;
  cfg.n_total = 900;
  cfg.positive_rate = 0.1;
  const GroupedDataset a = generate_synthetic(cfg);
  const GroupedDataset b = generate_synthetic(cfg);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  cfg.seed = 1;
  EXPECT_FALSE(generate_synthetic(cfg).features == a.features);
}

TEST(Synthetic, GroupsAreNegativeMajority) {
  const GroupedDataset d = generate_synthetic(SynthConfig{});
  std::map<std::int64_t, std::pair<int, int>> counts;
  for (std::size_t i = 0; i < d.size(); ++i) (d.labels[i] ? counts[d.groups[i]].second : counts[d.groups[i]].first)++;
  int carriers = 0;
  for (const auto& [g, c] : counts) {
    EXPECT_GT(c.first, c.second);
    carriers += c.second > 0;
  }
  EXPECT_EQ(carriers, 30);
}

TEST(Synthetic, RejectsDegenerateConfigs) {
  SynthConfig cfg;
  cfg.positive_rate = 0.0;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.n_total = 10;
  cfg.n_groups = 11;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.n_total = 10;
  cfg.n_groups = 2;
  cfg.positive_rate = 0.01;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
}

TEST(Csv, ReadsWellFormedFile) {
  const auto p = write_temp("nuce_ok.csv", "group_id,label,f0,f1\n1,0,0.5,1\n1,1,2.5,-1e-3\n7,0,3,4\n");
  const GroupedDataset d = load_csv(p);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.groups, (std::vector<std::int64_t>{1, 1, 7}));
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_EQ(d.features(1, 1), -1e-3);
}

TEST(Csv, RoundTripsThroughWriter) {
  SynthConfig cfg;
  cfg.n_total = 300;
  cfg.positive_rate = 0.1;
  cfg.n_groups = 12;
  const GroupedDataset d = generate_synthetic(cfg);
  const auto p = std::filesystem::temp_directory_path() / "nuce_roundtrip.csv";
  write_csv(d, p);
  const GroupedDataset back = load_csv(p);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.groups, d.groups);
}

TEST(Csv, NanNamesRow) {
  const auto p = write_temp("nuce_nan.csv", "group_id,label,f0\n1,0,0.5\n2,1,NaN\n");
  try {
    load_csv(p);
    FAIL() << "expected a parse error";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.kind(), CsvError::Kind::ParseFailure);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(Csv, ErrorKinds) {
  EXPECT_EQ(csv_kind(write_temp("nuce_header.csv", "group_id,label,f0\n")), CsvError::Kind::EmptyFile);
  EXPECT_EQ(csv_kind(write_temp("nuce_empty.csv", "")), CsvError::Kind::EmptyFile);
  EXPECT_EQ(csv_kind(write_temp("nuce_cols.csv", "label,f0\n0,1\n")), CsvError::Kind::MissingColumns);
  EXPECT_EQ(csv_kind(write_temp("nuce_ragged.csv", "group_id,label,f0,f1\n1,0,1\n")), CsvError::Kind::ParseFailure);
  EXPECT_EQ(csv_kind(write_temp("nuce_inf.csv", "group_id,label,f0\n1,0,inf\n")), CsvError::Kind::ParseFailure);
  EXPECT_EQ(csv_kind("/nonexistent/nuce.csv"), CsvError::Kind::FileNotFound);
}

TEST(GroupKFold, NinetyGroupsFiveFolds) {
  const GroupedDataset d = generate_synthetic(SynthConfig{});
  const auto folds = group_kfold(d, 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen_val;
  for (const auto& f : folds) {
    std::set<std::int64_t> val_groups;
    for (std::size_t r : f.val) val_groups.insert(d.groups[r]);
    EXPECT_EQ(val_groups.size(), 18u);
    EXPECT_EQ(f.train.size() + f.val.size(), d.size());
    seen_val.insert(f.val.begin(), f.val.end());
  }
  EXPECT_EQ(seen_val.size(), d.size());
}

TEST(GroupKFold, LeaveOneGroupOut) {
  std::mt19937_64 rng(1);
  const GroupedDataset d = grouped(40, 8, rng);
  const auto folds = group_kfold(d, d.distinct_groups().size(), 3);
  for (const auto& f : folds) {
    std::set<std::int64_t> val_groups;
    for (std::size_t r : f.val) val_groups.insert(d.groups[r]);
    EXPECT_EQ(val_groups.size(), 1u);
  }
}

TEST(GroupKFold, GroupsNeverStraddleSplits) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = 2 + rep % 6;
    const GroupedDataset d = grouped(20 + rep % 50, k + rep % 5, rng);
    for (const auto& f : group_kfold(d, k, static_cast<std::uint64_t>(rep))) {
      std::set<std::int64_t> train_groups;
      for (std::size_t r : f.train) train_groups.insert(d.groups[r]);
      for (std::size_t r : f.val) EXPECT_FALSE(train_groups.count(d.groups[r]));
      EXPECT_FALSE(f.val.empty());
    }
  }
}

TEST(GroupKFold, Errors) {
  std::mt19937_64 rng(3);
  const GroupedDataset d = grouped(10, 3, rng);
  EXPECT_THROW(group_kfold(d, 1, 0), ConfigError);
  GroupedDataset few;
  few.features = DenseMatrix(4, 1);
  few.labels = {0, 1, 0, 1};
  few.groups = {5, 5, 6, 6};
  EXPECT_THROW(group_kfold(few, 3, 0), DataError);
}
