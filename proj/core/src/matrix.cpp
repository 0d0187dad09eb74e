#include "atnatlas/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atnatlas/errors.hpp"

namespace atnatlas {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DataError("from_rows: ragged initializer");
    std::copy(row.begin(), row.end(), m.data() + i * c);
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DataError("matmul: dimension mismatch, " + a.shape_str() + " * " + b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix out(m, n);
  const double* ad = a.data();
  const double* bd = b.data();
  double* od = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      const double* brow = bd + p * n;
      double* orow = od + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DataError("matmul_tn: dimension mismatch, " + a.shape_str() + "^T * " +
                    b.shape_str());
  }
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Matrix out(m, n);
  const double* ad = a.data();
  const double* bd = b.data();
  double* od = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ad[p * m + i];
      const double* brow = bd + p * n;
      double* orow = od + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += api * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DataError("matmul_nt: dimension mismatch, " + a.shape_str() + " * " +
                    b.shape_str() + "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Matrix out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto dst = out.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : in) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - mx);
      sum += dst[j];
    }
    for (double& v : dst) v /= sum;
  }
  return out;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps) {
  if (x.size() != gain.size() || x.size() != bias.size()) {
    throw DataError("layer_norm: length mismatch, x=" + std::to_string(x.size()) +
                    " gain=" + std::to_string(gain.size()) +
                    " bias=" + std::to_string(bias.size()));
  }
  if (!(eps > 0.0)) throw DataError("layer_norm: eps must be positive");
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = gain[i] * ((x[i] - mean) * inv_std) + bias[i];
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

}  // namespace atnatlas
