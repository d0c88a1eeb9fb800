#include "ocvl/pos_embed.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ocvl/kernels.hpp"

namespace ocvl {
namespace {

void check_args(std::size_t n, const char* axis, std::size_t f) {
  if (n < 1) throw ArgumentError(std::string("fourier grid needs ") + axis + " >= 1");
  if (f < 1) throw ArgumentError("fourier grid needs at least one frequency");
}

void write_axis(double* out, double coord, std::size_t f) {
  for (std::size_t j = 0; j < f; ++j) {
    const double arg = std::ldexp(1.0, static_cast<int>(j)) * std::numbers::pi * coord;
    out[2 * j] = std::sin(arg);
    out[2 * j + 1] = std::cos(arg);
  }
}

void check_projection(std::size_t raw_cols, const Matrix& weight, const Matrix& bias) {
  if (weight.rows() != raw_cols || bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw ShapeError("project_grid: raw width " + std::to_string(raw_cols) + ", weight " +
                     weight.shape_string() + ", bias " + bias.shape_string());
  }
}

}  // namespace

double grid_coordinate(std::size_t i, std::size_t n) {
  return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0;
}

Matrix fourier_grid(std::size_t h, std::size_t w, std::size_t f) {
  check_args(h, "h", f);
  check_args(w, "w", f);
  Matrix out(h * w, 4 * f);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double* row = out.row(i * w + j).data();
      write_axis(row, grid_coordinate(i, h), f);
      write_axis(row + 2 * f, grid_coordinate(j, w), f);
    }
  }
  return out;
}

Matrix fourier_grid_temporal(std::size_t t, std::size_t h, std::size_t w, std::size_t f) {
  check_args(t, "t", f);
  check_args(h, "h", f);
  check_args(w, "w", f);
  Matrix out(t * h * w, 6 * f);
  for (std::size_t s = 0; s < t; ++s) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double* row = out.row((s * h + i) * w + j).data();
        write_axis(row, grid_coordinate(s, t), f);
        write_axis(row + 2 * f, grid_coordinate(i, h), f);
        write_axis(row + 4 * f, grid_coordinate(j, w), f);
      }
    }
  }
  return out;
}

Matrix project_grid(const Matrix& raw, const Matrix& weight, const Matrix& bias) {
  check_projection(raw.cols(), weight, bias);
  Matrix out;
  kernels::gemm_nn(raw, weight, out);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bias(0, j);
  return out;
}

Var project_grid(Var raw, Var weight, Var bias) {
  check_projection(raw.cols(), weight.value(), bias.value());
  return add_row(matmul(raw, weight), bias);
}

}  // namespace ocvl
