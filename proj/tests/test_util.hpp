#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "nuce/matrix.hpp"

namespace nuce::testutil {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

inline std::vector<std::size_t> random_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<std::size_t> y(n);
  for (auto& v : y) v = pick(rng);
  return y;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double worst = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double d = a.data()[n] - b.data()[n];
    worst = std::max(worst, d < 0 ? -d : d);
  }
  return worst;
}

}  // namespace nuce::testutil
