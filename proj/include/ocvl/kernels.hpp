#pragma once

// Dense kernels behind the autodiff ops.
//
// Two implementations share one interface: `ocvl::kernels` holds the
// OpenMP-parallel versions used in production, `ocvl::kernels::serial` holds
// straightforward single-threaded loops kept as the reference for tests and
// the kernel benchmark. Parallel kernels split work over output rows only, so
// every output element is produced by one thread with a fixed summation order
// and results do not depend on the thread count.

#include <span>
#include <vector>

#include "ocvl/matrix.hpp"

namespace ocvl::kernels {

/// c = a * b, or c += a * b when `accumulate`. `c` is resized unless accumulating.
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
/// c = a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
/// c = a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

/// Row-wise softmax (max-subtracted).
void softmax_rows(const Matrix& logits, Matrix& out);

/// Per-row layer normalization. `normalized` receives (x - mean) * inv_std and
/// `inv_std` one value per row; both are needed by the backward pass.
void layer_norm_rows(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                     double eps, Matrix& out, Matrix& normalized, std::vector<double>& inv_std);

namespace serial {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void softmax_rows(const Matrix& logits, Matrix& out);
void layer_norm_rows(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                     double eps, Matrix& out, Matrix& normalized, std::vector<double>& inv_std);

}  // namespace serial

}  // namespace ocvl::kernels
