#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "nuce/losses.hpp"
#include "nuce/matrix.hpp"

namespace nuce {

struct ProjectionResult {
  DenseMatrix components;  // 2 x d, orthonormal rows
  DenseMatrix projected;   // N x 2
  std::array<double, 2> explained_variance{};
  DenseVector mean;        // d
};

inline constexpr double kPowerIterationTolerance = 1e-10;
inline constexpr std::size_t kPowerIterationMaxIters = 10000;

/// Top-2 principal components by power iteration with deflation on the
/// sample covariance (N - 1 denominator). Each component is signed so that
/// its largest-magnitude entry is positive. Requires N >= 3 and d >= 2;
/// throws DataError when every row is identical.
ProjectionResult pca_2d(const DenseMatrix& H);

struct ClusterStats {
  enum class Ratio { Finite, Infinite, Undefined };

  /// Mean ||h_i - a_k|| over rows labelled k; empty when class k has no rows.
  std::vector<std::optional<double>> mean_intra_dist;
  std::vector<std::size_t> missing_classes;
  /// Smallest pairwise anchor distance; empty with fewer than two anchors.
  std::optional<double> min_inter_anchor_dist;
  /// min_inter_anchor_dist / max_k mean_intra_dist.
  Ratio ratio_kind = Ratio::Undefined;
  double fisher_ratio = 0.0;
};

ClusterStats cluster_stats(const DenseMatrix& H, std::span<const std::size_t> labels, const AnchorSet& anchors);

/// Per-class means of H; classes without rows get a zero row.
AnchorSet class_centroids(const DenseMatrix& H, std::span<const std::size_t> labels, std::size_t num_classes);

nlohmann::json to_json(const ClusterStats& stats);

/// `pc1,pc2,label` rows.
void write_projection_csv(const ProjectionResult& proj, std::span<const std::size_t> labels,
                          const std::filesystem::path& path);
/// Scatter plot of the projection coloured by label.
void write_projection_svg(const ProjectionResult& proj, std::span<const std::size_t> labels,
                          const std::filesystem::path& path);

}  // namespace nuce
