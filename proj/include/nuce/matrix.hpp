#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nuce {

/// Row-major dense matrix of doubles.
///
/// Entries supplied at construction must be finite. Element access is
/// unchecked; shape-changing operations validate their operands and throw
/// ShapeError.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense vector of doubles; entries must be finite at construction.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t len) : data_(len, 0.0) {}
  explicit DenseVector(std::vector<double> data);
  DenseVector(std::initializer_list<double> values);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<double> data_;
};

/// a * b with ascending-index accumulation.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without materializing the transpose (U = H W^T).
DenseMatrix matmul_transposed(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b (gradient accumulation over the batch).
DenseMatrix transposed_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double s);

/// Row-wise softmax with per-row max subtraction.
DenseMatrix softmax_rows(const DenseMatrix& u);

double frobenius_sq(const DenseMatrix& a);
double dot(std::span<const double> a, std::span<const double> b);

/// Index of the maximum entry; ties resolve to the lowest index.
std::size_t argmax_row(std::span<const double> v);
inline std::size_t argmax_row(const DenseVector& v) { return argmax_row(v.data()); }

/// Rows of `a` selected by `indices`, in order.
DenseMatrix gather_rows(const DenseMatrix& a, std::span<const std::size_t> indices);

/// Throws ValueError when any entry is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

}  // namespace nuce
