#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nuce/errors.hpp"
#include "nuce/matrix.hpp"

namespace nuce {

/// Feature rows with a class label and a group id (one embryo sequence per
/// group). All three fields have one entry per row.
struct GroupedDataset {
  DenseMatrix features;
  std::vector<std::size_t> labels;
  std::vector<std::int64_t> groups;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  /// max(label) + 1, or 0 for an empty dataset.
  std::size_t num_classes() const;
  std::vector<std::int64_t> distinct_groups() const;

  GroupedDataset subset(std::span<const std::size_t> rows) const;
  void validate() const;
};

struct SynthConfig {
  std::size_t n_total = 13568;
  double positive_rate = 271.0 / 13568.0;
  std::size_t n_groups = 90;
  std::size_t d_in = 8;
  double class_separation = 4.0;
  double overlap_noise = 1.0;
  /// Std of the per-group offset, in units of overlap_noise.
  double group_offset_scale = 0.5;
  std::uint64_t seed = 0;

  /// round(n_total * positive_rate).
  std::size_t positive_count() const;
  void validate() const;
};

/// Two Gaussian classes whose means differ by `class_separation` along
/// feature 0. Row r belongs to group r mod n_groups; every frame of a group
/// shares one random offset. Positives are drawn from a seeded third of the
/// groups (more when those cannot hold them), so each group is a negative
/// majority with or without a few positives.
GroupedDataset generate_synthetic(const SynthConfig& cfg);

class CsvError : public DataError {
 public:
  enum class Kind { FileNotFound, EmptyFile, MissingColumns, ParseFailure };

  CsvError(Kind kind, const std::string& message) : DataError(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads `group_id,label,f0,...,f{d-1}`. Data rows are numbered from 1
/// (the header is row 0) in error messages.
GroupedDataset load_csv(const std::filesystem::path& path);
void write_csv(const GroupedDataset& data, const std::filesystem::path& path);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Shuffles the distinct group ids with `seed` and deals them round-robin
/// into k folds; fold f validates on the rows of its groups and trains on
/// everything else. Row indices are ascending within each split.
std::vector<FoldSplit> group_kfold(const GroupedDataset& data, std::size_t k, std::uint64_t seed);

}  // namespace nuce
