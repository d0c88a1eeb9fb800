#pragma once

// Fourier positional grids.
//
// Each axis coordinate is normalized to [-1, 1] at pixel centers,
// c_i = (2i + 1) / n - 1, and expanded into sin(2^j pi c), cos(2^j pi c) for
// j in [0, f). Channels are ordered axis-major, then frequency, then sin
// before cos. Positions are flattened row-major.

#include <cstddef>

#include "ocvl/autodiff.hpp"
#include "ocvl/matrix.hpp"

namespace ocvl {

inline constexpr std::size_t kDefaultFourierFreqs = 8;

/// Normalized coordinate of index i on an axis of n cells.
double grid_coordinate(std::size_t i, std::size_t n);

/// (h*w) x (4f) raw grid; axis 0 is the row, axis 1 the column.
Matrix fourier_grid(std::size_t h, std::size_t w, std::size_t f);

/// (t*h*w) x (6f) grid with time as a leading third axis.
Matrix fourier_grid_temporal(std::size_t t, std::size_t h, std::size_t w, std::size_t f);

/// Position-wise affine map raw * weight + bias (weight: 4f x D, bias: 1 x D).
Matrix project_grid(const Matrix& raw, const Matrix& weight, const Matrix& bias);
Var project_grid(Var raw, Var weight, Var bias);

}  // namespace ocvl
