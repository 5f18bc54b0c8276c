#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "nuce/analysis.hpp"
#include "nuce/errors.hpp"
#include "test_util.hpp"

using namespace nuce;

TEST(Pca, LineYEqualsTwoX) {
  DenseMatrix H(20, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    H(i, 0) = static_cast<double>(i) - 7.0;
    H(i, 1) = 2.0 * H(i, 0);
  }
  const ProjectionResult r = pca_2d(H);
  EXPECT_NEAR(r.components(0, 0), 1.0 / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(r.components(0, 1), 2.0 / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(r.explained_variance[1], 0.0, 1e-9);
  EXPECT_GT(r.explained_variance[0], 0.0);
}

TEST(Pca, IsotropicVariancesComparable) {
  std::mt19937_64 rng(1);
  const ProjectionResult r = pca_2d(testutil::random_matrix(10000, 3, rng));
  const double ratio = r.explained_variance[0] / r.explained_variance[1];
  EXPECT_GE(ratio, 0.5);
  EXPECT_LE(ratio, 2.0);
}

TEST(Pca, RankTwoReconstruction) {
  std::mt19937_64 rng(2);
  const DenseMatrix coeff = testutil::random_matrix(50, 2, rng);
  const DenseMatrix basis = testutil::random_matrix(2, 5, rng);
  DenseMatrix H = matmul(coeff, basis);
  for (std::size_t i = 0; i < H.rows(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) H(i, j) += static_cast<double>(j);
  }
  const ProjectionResult r = pca_2d(H);
  DenseMatrix back = matmul(r.projected, r.components);
  for (std::size_t i = 0; i < back.rows(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) back(i, j) += r.mean[j];
  }
  EXPECT_LT(testutil::max_abs_diff(back, H), 1e-8);
}

TEST(Pca, ComponentsOrthonormalAndSigned) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    DenseMatrix H = testutil::random_matrix(40, 4, rng);
    for (std::size_t i = 0; i < 40; ++i) H(i, rep % 4) *= 3.0;
    const ProjectionResult r = pca_2d(H);
    EXPECT_NEAR(dot(r.components.row(0), r.components.row(0)), 1.0, 1e-9);
    EXPECT_NEAR(dot(r.components.row(1), r.components.row(1)), 1.0, 1e-9);
    EXPECT_NEAR(dot(r.components.row(0), r.components.row(1)), 0.0, 1e-8);
    EXPECT_GE(r.explained_variance[0], r.explained_variance[1]);
    for (std::size_t c = 0; c < 2; ++c) {
      const auto row = r.components.row(c);
      const auto big = std::max_element(row.begin(), row.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
      EXPECT_GT(*big, 0.0);
    }
  }
}

TEST(Pca, Degenerate) {
  EXPECT_THROW(pca_2d(DenseMatrix(2, 3)), ShapeError);
  DenseMatrix same(5, 2);
  for (std::size_t i = 0; i < 5; ++i) same(i, 0) = same(i, 1) = 1.5;
  EXPECT_THROW(pca_2d(same), DataError);
}

TEST(ClusterStats, FeaturesAtAnchorsGiveInfiniteRatio) {
  const AnchorSet A{DenseMatrix{{0, 0}, {3, 4}}};
  const DenseMatrix H{{0, 0}, {3, 4}, {3, 4}};
  const std::vector<std::size_t> y{0, 1, 1};
  const ClusterStats s = cluster_stats(H, y, A);
  EXPECT_EQ(*s.mean_intra_dist[0], 0.0);
  EXPECT_EQ(*s.mean_intra_dist[1], 0.0);
  EXPECT_EQ(*s.min_inter_anchor_dist, 5.0);
  EXPECT_EQ(s.ratio_kind, ClusterStats::Ratio::Infinite);
  EXPECT_EQ(to_json(s)["fisher_ratio_kind"], "infinite");
}

TEST(ClusterStats, ConstructedRatioTen) {
  const AnchorSet A{DenseMatrix{{0, 0}, {10, 0}}};
  DenseMatrix H(8, 2);
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 8; ++i) {
    const double angle = static_cast<double>(i % 4) * 1.5707963267948966;
    const std::size_t k = i / 4;
    H(i, 0) = 10.0 * static_cast<double>(k) + std::cos(angle);
    H(i, 1) = std::sin(angle);
    y.push_back(k);
  }
  const ClusterStats s = cluster_stats(H, y, A);
  EXPECT_EQ(s.ratio_kind, ClusterStats::Ratio::Finite);
  EXPECT_NEAR(s.fisher_ratio, 10.0, 1e-12);
}

TEST(ClusterStats, SingleClassUndefined) {
  const AnchorSet A{DenseMatrix{{1, 1}}};
  const DenseMatrix H{{0, 0}, {2, 2}};
  const std::vector<std::size_t> y{0, 0};
  const ClusterStats s = cluster_stats(H, y, A);
  EXPECT_FALSE(s.min_inter_anchor_dist.has_value());
  EXPECT_EQ(s.ratio_kind, ClusterStats::Ratio::Undefined);
  EXPECT_EQ(to_json(s)["fisher_ratio_kind"], "undefined");
}

TEST(ClusterStats, MissingClassReported) {
  const AnchorSet A{DenseMatrix{{0, 0}, {1, 0}, {0, 1}}};
  const DenseMatrix H{{0.5, 0}, {1, 0.5}};
  const std::vector<std::size_t> y{0, 1};
  const ClusterStats s = cluster_stats(H, y, A);
  EXPECT_EQ(s.missing_classes, std::vector<std::size_t>{2});
  EXPECT_FALSE(s.mean_intra_dist[2].has_value());
  EXPECT_EQ(s.ratio_kind, ClusterStats::Ratio::Finite);
}

TEST(ClusterStats, CentroidsAreClassMeans) {
  const DenseMatrix H{{1, 2}, {3, 4}, {10, 10}};
  const std::vector<std::size_t> y{0, 0, 1};
  const AnchorSet c = class_centroids(H, y, 3);
  EXPECT_EQ(c.anchors, (DenseMatrix{{2, 3}, {10, 10}, {0, 0}}));
}

TEST(Projection, CsvHasOneRowPerInput) {
  std::mt19937_64 rng(4);
  const DenseMatrix H = testutil::random_matrix(37, 3, rng);
  const std::vector<std::size_t> y = testutil::random_labels(37, 2, rng);
  const ProjectionResult r = pca_2d(H);
  const auto dir = std::filesystem::temp_directory_path();
  write_projection_csv(r, y, dir / "nuce_proj.csv");
  write_projection_svg(r, y, dir / "nuce_proj.svg");
  std::ifstream in(dir / "nuce_proj.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "pc1,pc2,label");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 37u);
  EXPECT_GT(std::filesystem::file_size(dir / "nuce_proj.svg"), 0u);
}
