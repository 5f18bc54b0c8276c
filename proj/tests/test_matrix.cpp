#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "nuce/errors.hpp"
#include "nuce/matrix.hpp"
#include "test_util.hpp"

using namespace nuce;
using nuce::testutil::random_matrix;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  DenseMatrix a{{1, 2}, {3, 4}};
  DenseMatrix eye{{1, 0}, {0, 1}};
  EXPECT_EQ(matmul(a, eye), a);
}

TEST(Matmul, RowTimesColumn) {
  DenseMatrix r = matmul(DenseMatrix{{1, 2}}, DenseMatrix{{3}, {4}});
  ASSERT_EQ(r.rows(), 1u);
  ASSERT_EQ(r.cols(), 1u);
  EXPECT_EQ(r(0, 0), 11.0);
}

TEST(Matmul, TransposedMatchesRowDots) {
  std::mt19937_64 rng(3);
  DenseMatrix h = random_matrix(2, 3, rng);
  DenseMatrix w = random_matrix(2, 3, rng);
  DenseMatrix u = matmul_transposed(h, w);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < 3; ++j) s += h(i, j) * w(k, j);
      EXPECT_NEAR(u(i, k), s, 1e-14);
    }
  }
}

TEST(Matmul, ShapeVariantsAgree) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    DenseMatrix a = random_matrix(4, 3, rng);
    DenseMatrix b = random_matrix(5, 3, rng);
    DenseMatrix c = random_matrix(4, 2, rng);
    EXPECT_LT(testutil::max_abs_diff(matmul_transposed(a, b), matmul(a, transpose(b))), 1e-13);
    EXPECT_LT(testutil::max_abs_diff(transposed_matmul(a, c), matmul(transpose(a), c)), 1e-13);
  }
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), ShapeError);
  EXPECT_THROW(matmul_transposed(DenseMatrix(2, 3), DenseMatrix(2, 2)), ShapeError);
  EXPECT_THROW(subtract(DenseMatrix(2, 3), DenseMatrix(3, 2)), ShapeError);
}

TEST(DenseMatrixCtor, RejectsNonFiniteAndBadLength) {
  EXPECT_THROW(DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), ValueError);
  EXPECT_THROW(DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::infinity()}), ValueError);
  EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  EXPECT_THROW(DenseVector({std::numeric_limits<double>::quiet_NaN()}), ValueError);
}

TEST(Softmax, ZeroRowIsUniform) {
  DenseMatrix p = softmax_rows(DenseMatrix{{0, 0}});
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  DenseMatrix p = softmax_rows(DenseMatrix{{1000, 1000}});
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(Softmax, MatchesLongDoubleOracle) {
  DenseMatrix p = softmax_rows(DenseMatrix{{1, 2, 3}});
  long double z = 0;
  for (int k = 1; k <= 3; ++k) z += std::exp(static_cast<long double>(k - 3));
  for (int k = 1; k <= 3; ++k) {
    EXPECT_NEAR(p(0, k - 1), static_cast<double>(std::exp(static_cast<long double>(k - 3)) / z), 1e-15);
  }
}

TEST(Softmax, RowsAreDistributions) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    DenseMatrix p = softmax_rows(random_matrix(6, 4, rng, 20.0));
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0.0;
      for (double v : p.row(i)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, ShiftInvariant) {
  std::mt19937_64 rng(13);
  DenseMatrix u = random_matrix(3, 5, rng);
  DenseMatrix shifted = u;
  for (std::size_t i = 0; i < 3; ++i) {
    for (double& v : shifted.row(i)) v += 7.5 * static_cast<double>(i + 1);
  }
  EXPECT_LT(testutil::max_abs_diff(softmax_rows(u), softmax_rows(shifted)), 1e-14);
}

TEST(Frobenius, Examples) {
  EXPECT_EQ(frobenius_sq(DenseMatrix(3, 2)), 0.0);
  EXPECT_EQ(frobenius_sq(DenseMatrix{{3, 4}}), 25.0);
  std::mt19937_64 rng(17);
  DenseMatrix a = random_matrix(4, 3, rng);
  double oracle = 0.0;
  for (std::size_t i = 0; i < 4; ++i) oracle += dot(a.row(i), a.row(i));
  EXPECT_NEAR(frobenius_sq(a), oracle, 1e-13);
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax_row(DenseVector{0.2, 0.8}), 1u);
  EXPECT_EQ(argmax_row(DenseVector{0.5, 0.5}), 0u);
  EXPECT_EQ(argmax_row(DenseVector{0.1, 0.7, 0.2}), 1u);
  EXPECT_THROW(argmax_row(DenseVector{}), ShapeError);
}

TEST(GatherRows, SelectsInOrder) {
  DenseMatrix a{{1, 2}, {3, 4}, {5, 6}};
  const std::vector<std::size_t> idx{2, 0, 2};
  EXPECT_EQ(gather_rows(a, idx), (DenseMatrix{{5, 6}, {1, 2}, {5, 6}}));
}
