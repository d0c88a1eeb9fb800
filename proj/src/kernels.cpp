#include "ocvl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace ocvl::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 15;

void check_inner(std::size_t lhs, std::size_t rhs, const char* op, const Matrix& a,
                 const Matrix& b) {
  if (lhs != rhs) {
    throw ShapeError(std::string(op) + ": " + a.shape_string() + " with " + b.shape_string());
  }
}

void prepare_output(Matrix& c, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (c.rows() != rows || c.cols() != cols) {
      throw ShapeError("gemm accumulate target is " + c.shape_string());
    }
  } else if (c.rows() != rows || c.cols() != cols) {
    c = Matrix(rows, cols);
  } else {
    c.fill(0.0);
  }
}

}  // namespace

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_inner(a.cols(), b.rows(), "gemm_nn", a, b);
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  prepare_output(c, a.rows(), n, accumulate);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * static_cast<std::int64_t>(k * n) > kParallelWork)
  for (std::int64_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    const double* arow = pa + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = pb + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_inner(a.cols(), b.cols(), "gemm_nt", a, b);
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t k = a.cols();
  const std::size_t n = b.rows();
  prepare_output(c, a.rows(), n, accumulate);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * static_cast<std::int64_t>(k * n) > kParallelWork)
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_inner(a.rows(), b.rows(), "gemm_tn", a, b);
  const std::size_t m = a.rows();
  const std::int64_t k = static_cast<std::int64_t>(a.cols());
  const std::size_t n = b.cols();
  prepare_output(c, a.cols(), n, accumulate);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  // Each thread owns whole output rows and walks the shared dimension in order.
#pragma omp parallel for schedule(static) if (k * static_cast<std::int64_t>(m * n) > kParallelWork)
  for (std::int64_t i = 0; i < k; ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < m; ++p) {
      const double av = pa[p * k + i];
      const double* brow = pb + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void softmax_rows(const Matrix& logits, Matrix& out) {
  if (!out.same_shape(logits)) out = Matrix(logits.rows(), logits.cols());
  const std::int64_t rows = static_cast<std::int64_t>(logits.rows());
  const std::size_t cols = logits.cols();
#pragma omp parallel for schedule(static) if (rows * static_cast<std::int64_t>(cols) > kParallelWork)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* in = logits.data() + r * cols;
    double* o = out.data() + r * cols;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < cols; ++j) o[j] *= inv;
  }
}

void layer_norm_rows(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                     double eps, Matrix& out, Matrix& normalized, std::vector<double>& inv_std) {
  const std::size_t cols = x.cols();
  if (gamma.size() != cols || beta.size() != cols) {
    throw ShapeError("layer_norm: scale/shift width " + std::to_string(gamma.size()) +
                     " for input " + x.shape_string());
  }
  if (!out.same_shape(x)) out = Matrix(x.rows(), cols);
  if (!normalized.same_shape(x)) normalized = Matrix(x.rows(), cols);
  inv_std.assign(x.rows(), 0.0);
  const std::int64_t rows = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(static) if (rows * static_cast<std::int64_t>(cols) > kParallelWork)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += in[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    double* nrm = normalized.data() + r * cols;
    double* o = out.data() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      nrm[j] = (in[j] - mean) * is;
      o[j] = nrm[j] * gamma[j] + beta[j];
    }
  }
}

namespace serial {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_inner(a.cols(), b.rows(), "gemm_nn", a, b);
  prepare_output(c, a.rows(), b.cols(), accumulate);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) += s;
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_inner(a.cols(), b.cols(), "gemm_nt", a, b);
  prepare_output(c, a.rows(), b.rows(), accumulate);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) += s;
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  check_inner(a.rows(), b.rows(), "gemm_tn", a, b);
  prepare_output(c, a.cols(), b.cols(), accumulate);
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      c(i, j) += s;
    }
  }
}

void softmax_rows(const Matrix& logits, Matrix& out) {
  out = Matrix(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double mx = logits(r, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(r, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) sum += std::exp(logits(r, j) - mx);
    for (std::size_t j = 0; j < logits.cols(); ++j) out(r, j) = std::exp(logits(r, j) - mx) / sum;
  }
}

void layer_norm_rows(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                     double eps, Matrix& out, Matrix& normalized, std::vector<double>& inv_std) {
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    throw ShapeError("layer_norm: scale/shift width mismatch for " + x.shape_string());
  }
  out = Matrix(x.rows(), x.cols());
  normalized = Matrix(x.rows(), x.cols());
  inv_std.assign(x.rows(), 0.0);
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mean = 0.0;
    for (double v : x.row(r)) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x.row(r)) var += (v - mean) * (v - mean);
    var /= n;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      normalized(r, j) = (x(r, j) - mean) * inv_std[r];
      out(r, j) = normalized(r, j) * gamma[j] + beta[j];
    }
  }
}

}  // namespace serial

}  // namespace ocvl::kernels
