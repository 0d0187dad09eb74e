#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace atnatlas {

// Dense row-major matrix of 64-bit floats. The row-major layout is part of
// the on-disk contract for checkpoints and attention dumps, so it is fixed.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool all_finite() const;
  std::string shape_str() const;  // "RxC", for diagnostics

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product a*b with 64-bit accumulation. Throws DataError on a
// dimension mismatch, reporting both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);

// a^T * b and a * b^T without materializing the transpose; used heavily by
// the backward pass.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// Row-wise softmax with max-subtraction, so arbitrarily large finite inputs
// cannot overflow. Every output row sums to 1.
Matrix softmax_rows(const Matrix& m);

// (x - mean) / sqrt(var + eps), then gain * y + bias. Biased (1/n) variance.
std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps);

// tanh-approximation GELU: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
// The approximation is the contract, not a shortcut: it keeps results
// bit-reproducible across implementations.
double gelu(double x);
double gelu_grad(double x);

}  // namespace atnatlas
