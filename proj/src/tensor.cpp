#include "ibg/tensor.hpp"

#include <cmath>
#include <utility>

#include "ibg/error.hpp"

namespace ibg {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), v_(std::move(values)) {
  if (v_.size() != rows_ * cols_) {
    throw ShapeError("tensor: value count " + std::to_string(v_.size()) +
                     " does not match shape " + shape_str());
  }
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.v_[0] = v;
  return t;
}

Tensor Tensor::ones(std::size_t rows, std::size_t cols) { return full(rows, cols, 1.0); }

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v) {
  Tensor t(rows, cols);
  t.fill(v);
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor::all_finite() const {
  for (double x : v_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double Tensor::scalar_value() const {
  if (rows_ != 1 || cols_ != 1) {
    throw ShapeError("scalar_value: tensor is " + shape_str() + ", expected 1x1");
  }
  return v_[0];
}

void Tensor::fill(double v) {
  for (double& x : v_) x = v;
}

void Tensor::add_inplace(const Tensor& o) {
  if (!same_shape(o)) {
    throw ShapeError("add_inplace: " + shape_str() + " vs " + o.shape_str());
  }
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
}

void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (!accumulate) c.fill(0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = pb + p * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  // c_ij (+)= sum_p a_ip * b_jp
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (!accumulate) c.fill(0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      pc[i * n + j] += acc;
    }
  }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  // c_ij (+)= sum_p a_pi * b_pj
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  if (!accumulate) c.fill(0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = pa + p * m;
    const double* brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = arow[i];
      if (api == 0.0) continue;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor c(a.rows(), b.cols());
  gemm_nn(a, b, c, false);
  return c;
}

Tensor transpose_values(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

}  // namespace ibg
